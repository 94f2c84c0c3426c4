//! Forward simulation of partial sums under a fixed Markov kernel policy.
//!
//! Path `i` draws from its own ChaCha8 stream `i` under the configured seed,
//! so every path is reproducible regardless of scheduling, and aggregation
//! runs in path order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguitySet;
use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::lattice_dp::KernelPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub policy: KernelPolicy,
    pub set: AmbiguitySet,
    pub n: usize,
    pub paths: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub estimate: f64,
    pub stderr: f64,
    pub paths: u64,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("horizon n must be at least 1"));
        }
        if self.paths == 0 {
            return Err(Error::invalid("paths must be at least 1"));
        }
        if self.policy.horizon() < self.n {
            return Err(Error::invalid(format!(
                "policy horizon {} is shorter than n = {}",
                self.policy.horizon(),
                self.n
            )));
        }
        self.policy.check_coverage(&self.set, self.n)
    }

    fn path_coord(&self, index: u64) -> Result<i64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let gens = self.set.generators();
        let mut coord = 0i64;
        for step in 1..=self.n {
            let g = self
                .policy
                .choice(step, coord, false)
                .filter(|&g| g < gens.len())
                .ok_or(Error::PolicyGap {
                    step,
                    coord,
                    flag: false,
                })?;
            let atoms = gens[g].atoms();
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = atoms[atoms.len() - 1].coord;
            for a in atoms {
                acc += a.weight;
                if u < acc {
                    pick = a.coord;
                    break;
                }
            }
            coord += pick;
        }
        Ok(coord)
    }

    /// `S_n/n` for every path, in path order.
    pub fn sample_means(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let lattice = self.set.lattice();
        let n = self.n as f64;
        (0..self.paths)
            .into_par_iter()
            .map(|i| Ok(lattice.point(self.path_coord(i)?) / n))
            .collect()
    }
}

/// Sample mean of `f(S_n/n)` with its standard error.
pub fn simulate(config: &SimConfig, f: &TestFunction) -> Result<SimResult> {
    f.validate()?;
    let values: Vec<f64> = config.sample_means()?.into_iter().map(|x| f.eval(x)).collect();
    let m = values.len() as f64;
    let estimate = values.iter().sum::<f64>() / m;
    let stderr = if values.len() > 1 {
        let ss: f64 = values.iter().map(|v| (v - estimate).powi(2)).sum();
        (ss / (m - 1.0)).sqrt() / m.sqrt()
    } else {
        0.0
    };
    Ok(SimResult {
        estimate,
        stderr,
        paths: config.paths,
    })
}

/// Fraction of paths with `|S_n/n − mu| > eps`.
pub fn deviation_frequency(config: &SimConfig, mu: f64, eps: f64) -> Result<f64> {
    let means = config.sample_means()?;
    let hits = means.iter().filter(|&&x| (x - mu).abs() > eps).count();
    Ok(hits as f64 / means.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_dp::{policy_value, robust_value, DpOptions};

    const UNIFORM: &[(f64, f64)] = &[(-1.0, 0.5), (1.0, 0.5)];
    const SKEWED: &[(f64, f64)] = &[(-1.0, 0.25), (1.0, 0.75)];

    fn config(set: AmbiguitySet, policy: KernelPolicy, n: usize, paths: u64, seed: u64) -> SimConfig {
        SimConfig {
            policy,
            set,
            n,
            paths,
            seed,
        }
    }

    #[test]
    fn deterministic_path_has_zero_stderr() {
        let set = AmbiguitySet::new(1.0, &[&[(0.0, 1.0)]]).unwrap();
        let f = TestFunction::tent(0.0, 2.0).unwrap();
        let r = simulate(&config(set, KernelPolicy::constant(5, 0), 5, 100, 9), &f).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn constant_uniform_policy_matches_exact_value() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM]).unwrap();
        let policy = KernelPolicy::constant(2, 0);
        let cfg = config(set.clone(), policy.clone(), 2, 100_000, 1);
        let r = simulate(&cfg, &TestFunction::Abs).unwrap();
        let exact = policy_value(&set, &policy, 2, &TestFunction::Abs, &DpOptions::default()).unwrap();
        assert_eq!(exact, 0.5);
        assert!((r.estimate - 0.5).abs() <= 4.0 * r.stderr, "{r:?}");
    }

    #[test]
    fn robust_policy_reproduces_robust_value() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM, SKEWED]).unwrap();
        let f = TestFunction::tent(0.25, 0.25).unwrap();
        let robust = robust_value(&set, 64, &f, &DpOptions::default()).unwrap();
        let cfg = config(set, robust.policy, 64, 100_000, 7);
        let r = simulate(&cfg, &f).unwrap();
        assert!((r.estimate - robust.value).abs() <= 4.0 * r.stderr, "{r:?} vs {}", robust.value);
    }

    #[test]
    fn seed_determinism() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM, SKEWED]).unwrap();
        let f = TestFunction::tent(0.25, 0.25).unwrap();
        let robust = robust_value(&set, 16, &f, &DpOptions::default()).unwrap();
        let cfg = config(set, robust.policy, 16, 5_000, 42);
        let a = simulate(&cfg, &f).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| simulate(&cfg, &f).unwrap());
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let c = simulate(&SimConfig { seed: 43, ..cfg }, &f).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn classical_lln_deviation_frequency_decreases() {
        let set = AmbiguitySet::new(1.0, &[SKEWED]).unwrap();
        let freq: Vec<f64> = [16, 64, 256]
            .iter()
            .map(|&n| {
                let cfg = config(set.clone(), KernelPolicy::constant(n, 0), n, 20_000, 3);
                deviation_frequency(&cfg, 0.5, 0.1).unwrap()
            })
            .collect();
        assert!(freq[0] > freq[1] && freq[1] > freq[2], "{freq:?}");
    }

    #[test]
    fn policy_gap_is_reported() {
        let set = AmbiguitySet::new(1.0, &[UNIFORM]).unwrap();
        let cfg = config(set, KernelPolicy::constant(4, 3), 4, 10, 0);
        assert!(simulate(&cfg, &TestFunction::Abs).is_err());
        let cfg = SimConfig { paths: 0, ..cfg };
        assert!(simulate(&cfg, &TestFunction::Abs).is_err());
    }
}
