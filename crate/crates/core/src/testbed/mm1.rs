//! M/M/1 queue with unit service rate.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::seeds;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Mm1Error {
    #[error("arrival rate must lie in [0, 1) (got {0})")]
    DomainError(f64),
    #[error("warmup fraction must lie in [0, 1) (got {0})")]
    BadWarmup(f64),
    #[error("a replicate needs at least one customer")]
    NoCustomers,
}

/// Stationary mean and variance of the number in system, `x/(1−x)` and `x/(1−x)²`.
pub fn mm1_analytic(x: f64) -> Result<(f64, f64), Mm1Error> {
    if !(0.0..1.0).contains(&x) {
        return Err(Mm1Error::DomainError(x));
    }
    Ok((x / (1.0 - x), x / ((1.0 - x) * (1.0 - x))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mm1Config {
    pub arrival_rate: f64,
    /// Arrivals simulated per replicate.
    pub customers: usize,
    /// Leading fraction of arrivals discarded before averaging starts.
    pub warmup_fraction: f64,
    pub seed: u64,
}

impl Mm1Config {
    pub fn new(arrival_rate: f64, customers: usize, seed: u64) -> Self {
        Self { arrival_rate, customers, warmup_fraction: 0.1, seed }
    }

    pub fn validate(&self) -> Result<(), Mm1Error> {
        mm1_analytic(self.arrival_rate)?;
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Mm1Error::BadWarmup(self.warmup_fraction));
        }
        if self.customers == 0 {
            return Err(Mm1Error::NoCustomers);
        }
        Ok(())
    }
}

/// Time-average number of customers in the system after warmup, starting empty.
///
/// The queue is simulated as its embedded jump chain: from a nonempty state
/// the next event comes after `Exp(x + 1)` and is an arrival with
/// probability `x/(x + 1)`.
pub fn mm1_simulate(cfg: &Mm1Config) -> Result<f64, Mm1Error> {
    cfg.validate()?;
    let x = cfg.arrival_rate;
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut rng = seeds::rng(cfg.seed);
    let warmup = (cfg.warmup_fraction * cfg.customers as f64).floor() as usize;
    let p_arrival = x / (x + 1.0);
    let (mut in_system, mut arrivals) = (0u64, 0usize);
    let (mut area, mut elapsed) = (0.0, 0.0);
    while arrivals < cfg.customers {
        let rate = if in_system == 0 { x } else { x + 1.0 };
        let e: f64 = Exp1.sample(&mut rng);
        let dt = e / rate;
        if arrivals >= warmup {
            area += in_system as f64 * dt;
            elapsed += dt;
        }
        if in_system == 0 || rng.random_bool(p_arrival) {
            in_system += 1;
            arrivals += 1;
        } else {
            in_system -= 1;
        }
    }
    Ok(if elapsed > 0.0 { area / elapsed } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_examples() {
        assert_eq!(mm1_analytic(0.5).unwrap(), (1.0, 2.0));
        assert_eq!(mm1_analytic(0.0).unwrap(), (0.0, 0.0));
        let (m, v) = mm1_analytic(0.9).unwrap();
        assert!((m - 9.0).abs() < 1e-12 && (v - 90.0).abs() < 1e-9);
        assert_eq!(mm1_analytic(1.0), Err(Mm1Error::DomainError(1.0)));
    }

    #[test]
    fn idle_queue_and_determinism() {
        assert_eq!(mm1_simulate(&Mm1Config::new(0.0, 100, 1)).unwrap(), 0.0);
        let c = Mm1Config::new(0.6, 5_000, 9);
        assert_eq!(mm1_simulate(&c).unwrap(), mm1_simulate(&c).unwrap());
        assert_ne!(mm1_simulate(&c).unwrap(), mm1_simulate(&Mm1Config { seed: 10, ..c }).unwrap());
    }

    #[test]
    fn long_run_mean_at_half_load() {
        let mean: f64 = (0..10u64).map(|s| mm1_simulate(&Mm1Config::new(0.5, 200_000, s)).unwrap()).sum::<f64>() / 10.0;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }
}
