//! Power sums `sum m^{-q}` over integer ranges, exact up to a table limit
//! and by Euler-Maclaurin beyond it.

/// Largest index kept in the explicit tables.
pub const TABLE_LIMIT: usize = 1 << 16;

/// Sum of `m^{-q}` for `a < m <= b`, both large (`a >= TABLE_LIMIT`).
pub fn em_range(q: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let f = |x: f64| x.powf(-q);
    let d1 = |x: f64| -q * x.powf(-q - 1.0);
    let d3 = |x: f64| -q * (q + 1.0) * (q + 2.0) * x.powf(-q - 3.0);
    let d5 = |x: f64| -q * (q + 1.0) * (q + 2.0) * (q + 3.0) * (q + 4.0) * x.powf(-q - 5.0);
    let ratio = ((b - a) / a).ln_1p();
    let integral = if q == 1.0 {
        ratio
    } else {
        a.powf(1.0 - q) * ((1.0 - q) * ratio).exp_m1() / (1.0 - q)
    };
    integral + 0.5 * (f(b) - f(a)) + (d1(b) - d1(a)) / 12.0 - (d3(b) - d3(a)) / 720.0
        + (d5(b) - d5(a)) / 30240.0
}

/// Sum of `m^{-q}` for `m > a`, `a >= TABLE_LIMIT`, `q > 1`.
pub fn em_tail(q: f64, a: f64) -> f64 {
    let f = a.powf(-q);
    let d1 = -q * a.powf(-q - 1.0);
    let d3 = -q * (q + 1.0) * (q + 2.0) * a.powf(-q - 3.0);
    let d5 = -q * (q + 1.0) * (q + 2.0) * (q + 3.0) * (q + 4.0) * a.powf(-q - 5.0);
    a.powf(1.0 - q) / (q - 1.0) - 0.5 * f - d1 / 12.0 + d3 / 720.0 - d5 / 30240.0
}

/// Prefix and suffix tables of `m^{-q}` for `m = 1..=TABLE_LIMIT`.
#[derive(Debug, Clone)]
pub struct PowerTable {
    q: f64,
    // prefix[i] = sum over m <= i, suffix[i] = sum over i < m <= TABLE_LIMIT
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

fn compensated(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut out = vec![0.0];
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        out.push(sum);
    }
    out
}

impl PowerTable {
    pub fn new(q: f64) -> Self {
        let prefix = compensated((1..=TABLE_LIMIT).map(|m| (m as f64).powf(-q)));
        let mut suffix = compensated((1..=TABLE_LIMIT).rev().map(|m| (m as f64).powf(-q)));
        suffix.reverse();
        PowerTable { q, prefix, suffix }
    }

    /// Sum over `a < m <= b` for integers `0 <= a <= b <= TABLE_LIMIT`,
    /// taking the difference with the smaller operands.
    fn table_range(&self, a: usize, b: usize) -> f64 {
        if self.suffix[a] < self.prefix[b] {
            self.suffix[a] - self.suffix[b]
        } else {
            self.prefix[b] - self.prefix[a]
        }
    }

    /// Sum over integers `m` with `lo < m <= hi`; `hi` may be infinite
    /// (then `q > 1` is required).
    pub fn range(&self, lo: f64, hi: f64) -> f64 {
        let a = lo.max(0.0).floor();
        let b = if hi.is_finite() { hi.floor() } else { f64::INFINITY };
        if b <= a {
            return 0.0;
        }
        let lim = TABLE_LIMIT as f64;
        if a >= lim {
            return if b.is_finite() { em_range(self.q, a, b) } else { em_tail(self.q, a) };
        }
        let head = self.table_range(a as usize, b.min(lim) as usize);
        if b <= lim {
            head
        } else if b.is_finite() {
            head + em_range(self.q, lim, b)
        } else {
            head + em_tail(self.q, lim)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(q: f64, a: u64, b: u64) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for m in (a + 1..=b).rev() {
            let y = (m as f64).powf(-q) - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        s
    }

    #[test]
    fn zeta_values() {
        let t = PowerTable::new(2.0);
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((t.range(0.0, f64::INFINITY) - z2).abs() < 1e-14);
        let t = PowerTable::new(1.5);
        assert!((t.range(0.0, f64::INFINITY) - 2.612_375_348_685_488).abs() < 1e-13);
    }

    #[test]
    fn euler_maclaurin_matches_brute_force() {
        for &q in &[-2.0, -0.5, 0.0, 0.5, 1.0, 1.5, 3.25] {
            let a = 70_000u64;
            let b = 400_000u64;
            let want = brute(q, a, b);
            let got = em_range(q, a as f64, b as f64);
            assert!(((got - want) / want).abs() < 1e-13, "q={q}: {got} vs {want}");
        }
        let t = PowerTable::new(0.75);
        let want = brute(0.75, 1000, 200_000);
        assert!(((t.range(1000.5, 200_000.0) - want) / want).abs() < 1e-13);
    }

    #[test]
    fn tail_consistent_with_range() {
        let q = 1.6;
        let a = 100_000.0;
        let split = em_range(q, a, 1e9) + em_tail(q, 1e9);
        assert!(((em_tail(q, a) - split) / split).abs() < 1e-12);
    }
}
