/// Inverse-CDF Poisson sampler, truncated where the CDF exceeds 1 − 1e−12.
#[derive(Debug, Clone)]
pub struct PoissonTable {
    cdf: Vec<f64>,
}

const TAIL: f64 = 1e-12;

impl PoissonTable {
    pub fn new(mean: f64) -> Self {
        let mut cdf = Vec::new();
        let mut pmf = (-mean).exp();
        let mut acc = 0.0;
        let mut n = 0u32;
        loop {
            acc += pmf;
            cdf.push(acc);
            if acc > 1.0 - TAIL || n > 10_000 {
                break;
            }
            n += 1;
            pmf *= mean / n as f64;
        }
        Self { cdf }
    }

    /// Photon number for a uniform draw `u ∈ [0, 1)`.
    pub fn sample(&self, u: f64) -> u32 {
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1) as u32
    }

    pub fn max_photons(&self) -> u32 {
        (self.cdf.len() - 1) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_probability() {
        let t = PoissonTable::new(0.5);
        let p0 = (-0.5f64).exp();
        assert_eq!(t.sample(0.0), 0);
        assert_eq!(t.sample(p0 - 1e-12), 0);
        assert_eq!(t.sample(p0 + 1e-12), 1);
        assert_eq!(t.sample(1.0 - 1e-15), t.max_photons());
    }

    #[test]
    fn truncation_tail_is_tiny() {
        for mean in [0.1, 0.5, 2.0, 10.0] {
            let t = PoissonTable::new(mean);
            let last = *t.cdf.last().unwrap();
            assert!(last > 1.0 - TAIL, "mean {mean}: cdf ends at {last}");
            // Mean of the truncated table matches the Poisson mean.
            let mut prev = 0.0;
            let mut m = 0.0;
            for (n, c) in t.cdf.iter().enumerate() {
                m += n as f64 * (c - prev);
                prev = *c;
            }
            assert!((m - mean).abs() < 1e-9 * mean.max(1.0));
        }
    }
}
