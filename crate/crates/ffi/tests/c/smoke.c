#include <math.h>
#include <stdio.h>
#include "gvc_randlab.h"

int main(void) {
    double c = 0.0;
    if (gvc_covariance_exact(200, 1.0, 0.001, &c) != GVC_STATUS_OK) return 1;
    if (fabs(c - 0.10385) > 5e-5) return 2;

    if (gvc_covariance_exact(0, 1.0, 0.001, &c) != GVC_STATUS_INVALID_ARGUMENT) return 3;
    if (gvc_last_error_message() == NULL) return 4;

    double flows[4] = {0.0, 1.0, 2.0, 0.0};
    double fd[2] = {1.0, 1.0};
    GvcTable *t = NULL;
    if (gvc_table_from_flows(2, flows, fd, &t) != GVC_STATUS_OK) return 5;
    double u1[2], d1[2];
    if (gvc_table_measures(t, u1, d1, NULL, NULL) != GVC_STATUS_OK) return 6;
    gvc_table_free(t);
    if (fabs(u1[0] - 2.25) > 1e-14 || fabs(d1[1] - 2.0) > 1e-14) return 7;

    printf("ok %s\n", gvc_version());
    return 0;
}
