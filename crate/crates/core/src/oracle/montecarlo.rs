//! Brute-force estimates of the first-row moments.
//!
//! `r` and `r'` only involve row 1 and column 1 of `A` plus `F_1`, so each
//! sample costs `O(N)` draws instead of a full table.

use rand::Rng;
use rayon::prelude::*;

use crate::analytics::{CompensatedSum, MomentSet, MomentSource};
use crate::error::{Error, Result};
use crate::model::{EntrySampler, InstanceStream, ModelParams};

pub const MIN_SAMPLES: usize = 10_000;
/// Samples drawn from one stream; chunk `c` uses instance index `c`.
const CHUNK: usize = 10_000;

#[derive(Default, Clone, Copy)]
struct Acc {
    sums: [CompensatedSum; 4],
    squares: [CompensatedSum; 4],
}

fn chunk_sums(sampler: &EntrySampler, params: &ModelParams, chunk: usize, len: usize) -> Acc {
    let n = params.n_sectors;
    let mut stream = InstanceStream::new(params.seed, chunk as u64);
    let mut acc = Acc::default();
    let sparse = params.sparsity > 0.0;
    for _ in 0..len {
        // row 1 (including the shared diagonal a_11), then column 1 below it, then F_1
        let mut row_sum = 0.0;
        let mut a11 = 0.0;
        let mut col_rest = 0.0;
        for j in 0..n {
            let mut x = sampler.flow(stream.values());
            if sparse && stream.mask().random::<f64>() < params.sparsity {
                x = 0.0;
            }
            if j == 0 {
                a11 = x;
            }
            row_sum += x;
        }
        for _ in 1..n {
            let mut x = sampler.flow(stream.values());
            if sparse && stream.mask().random::<f64>() < params.sparsity {
                x = 0.0;
            }
            col_rest += x;
        }
        let f = sampler.demand(stream.values());
        let y = row_sum + f;
        let r = row_sum / y;
        let rp = (a11 + col_rest) / y;
        for (k, v) in [r, rp, r * rp, r * r].into_iter().enumerate() {
            acc.sums[k].add(v);
            acc.squares[k].add(v * v);
        }
    }
    acc
}

/// Sample means of `r`, `r'`, `r r'`, `r^2` with their standard errors.
///
/// Deterministic in `params.seed` regardless of how rayon schedules chunks.
pub fn moments_bruteforce(params: &ModelParams, samples: usize) -> Result<MomentSet> {
    if samples < MIN_SAMPLES {
        return Err(Error::param(
            "samples",
            format!("need at least {MIN_SAMPLES}, got {samples}"),
        ));
    }
    let sampler = EntrySampler::new(params)?;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(samples - c * CHUNK);
            chunk_sums(&sampler, params, c, len)
        })
        .collect();

    let mut means = [0.0; 4];
    let mut std_errors = [0.0; 4];
    let m = samples as f64;
    for k in 0..4 {
        let mut s = CompensatedSum::default();
        let mut q = CompensatedSum::default();
        for p in &parts {
            s.add(p.sums[k].value());
            q.add(p.squares[k].value());
        }
        let mean = s.value() / m;
        let var = ((q.value() - m * mean * mean) / (m - 1.0)).max(0.0);
        means[k] = mean;
        std_errors[k] = (var / m).sqrt();
    }
    Ok(MomentSet {
        e_r: means[0],
        e_rp: means[1],
        e_rrp: means[2],
        e_r2: means[3],
        source: MomentSource::MonteCarlo {
            samples,
            std_errors,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_sparse_model_has_zero_moments() {
        let p = ModelParams::exponential(4, 1.0, 0.1, 1).with_sparsity(1.0);
        let m = moments_bruteforce(&p, MIN_SAMPLES).unwrap();
        assert_eq!(m.as_array(), [0.0; 4]);
    }

    #[test]
    fn too_few_samples() {
        let p = ModelParams::exponential(4, 1.0, 0.1, 1);
        assert!(moments_bruteforce(&p, 100).is_err());
    }

    #[test]
    fn deterministic() {
        let p = ModelParams::exponential(3, 1.0, 0.2, 17);
        let a = moments_bruteforce(&p, 25_000).unwrap();
        let b = moments_bruteforce(&p, 25_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_sector_has_r_equal_r_prime() {
        let p = ModelParams::exponential(1, 1.0, 0.3, 5);
        let m = moments_bruteforce(&p, MIN_SAMPLES).unwrap();
        assert_eq!(m.e_r, m.e_rp);
        assert_eq!(m.e_r2, m.e_rrp);
    }
}
