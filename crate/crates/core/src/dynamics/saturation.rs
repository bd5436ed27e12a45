use super::DynamicsError;

/// Odd saturating function with `S(0) = 0`, `S'(0) = 1` and
/// `sign S''(x) = -sign x`.
#[derive(Debug, Clone, PartialEq)]
pub enum Saturation {
    Tanh,
    Tabulated(TabulatedSaturation),
}

impl Saturation {
    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        match self {
            // evaluated on |y| so that S(-y) == -S(y) bit for bit
            Self::Tanh => y.abs().tanh().copysign(y),
            Self::Tabulated(t) => t.value(y),
        }
    }

    #[inline]
    pub fn slope(&self, y: f64) -> f64 {
        match self {
            Self::Tanh => {
                let t = y.tanh();
                1.0 - t * t
            }
            Self::Tabulated(t) => t.slope(y),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Tanh => "tanh",
            Self::Tabulated(_) => "tabulated",
        }
    }
}

/// `S` given on `0 = x_0 < x_1 < ... < x_m`, extended oddly to negative
/// arguments and held constant beyond `x_m`. Interpolation is cubic Hermite
/// with three-point slopes; the slope at the origin uses the mirrored
/// neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSaturation {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

pub const SLOPE_TOL: f64 = 1e-4;
const GRID_POINTS: usize = 1001;
const GRID_HALF_WIDTH: f64 = 10.0;

impl TabulatedSaturation {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, DynamicsError> {
        let bad = |msg: &str| Err(DynamicsError::InvalidSaturation(msg.to_string()));
        if xs.len() != ys.len() || xs.len() < 3 {
            return bad("need at least three (x, y) pairs of equal length");
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return bad("table entries must be finite");
        }
        if xs[0] != 0.0 || ys[0] != 0.0 {
            return bad("table must start at S(0) = 0");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return bad("x values must be strictly increasing");
        }
        let m = xs.len();
        let mut slopes = vec![0.0; m];
        // mirrored neighbor (-x_1, -y_1) makes the origin slope y_1 / x_1
        slopes[0] = ys[1] / xs[1];
        for i in 1..m - 1 {
            let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            let (d0, d1) = ((ys[i] - ys[i - 1]) / h0, (ys[i + 1] - ys[i]) / h1);
            slopes[i] = (h1 * d0 + h0 * d1) / (h0 + h1);
        }
        slopes[m - 1] = 0.0;
        let table = Self { xs, ys, slopes };
        table.verify()?;
        Ok(table)
    }

    /// Tabulates `f` on `[0, x_max]` with `points` knots.
    pub fn sample(f: impl Fn(f64) -> f64, x_max: f64, points: usize) -> Result<Self, DynamicsError> {
        let xs: Vec<f64> = (0..points).map(|i| x_max * i as f64 / (points - 1) as f64).collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn value(&self, y: f64) -> f64 {
        let (v, _) = self.eval(y.abs());
        v.copysign(y)
    }

    pub fn slope(&self, y: f64) -> f64 {
        self.eval(y.abs()).1
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let m = self.xs.len();
        if x >= self.xs[m - 1] {
            return (self.ys[m - 1], 0.0);
        }
        let seg = self.xs.partition_point(|&v| v <= x).saturating_sub(1).min(m - 2);
        let (x0, x1) = (self.xs[seg], self.xs[seg + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.ys[seg], self.ys[seg + 1]);
        let (m0, m1) = (self.slopes[seg] * h, self.slopes[seg + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let deriv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (value, deriv)
    }

    /// Spot checks of the saturation axioms: `S'(0) ≈ 1` by central
    /// differences and the concavity sign on a 1001-point grid over [-10, 10].
    fn verify(&self) -> Result<(), DynamicsError> {
        let h = 1e-5;
        let fd = (self.value(h) - self.value(-h)) / (2.0 * h);
        if (fd - 1.0).abs() > SLOPE_TOL {
            return Err(DynamicsError::InvalidSaturation(format!("S'(0) = {fd}, expected 1")));
        }
        let step = 2.0 * GRID_HALF_WIDTH / (GRID_POINTS - 1) as f64;
        for i in 1..GRID_POINTS - 1 {
            let x = -GRID_HALF_WIDTH + i as f64 * step;
            let second = self.value(x + step) - 2.0 * self.value(x) + self.value(x - step);
            let tol = 1e-12;
            let ok = if x > step / 2.0 {
                second <= tol
            } else if x < -step / 2.0 {
                second >= -tol
            } else {
                true
            };
            if !ok {
                return Err(DynamicsError::InvalidSaturation(format!(
                    "concavity sign violated near x = {x:.3}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tanh_is_exactly_odd() {
        for y in [1e-300, 0.1, 0.7, 3.3, 19.0, 1e3] {
            assert_eq!(Saturation::Tanh.value(-y), -Saturation::Tanh.value(y));
        }
        assert_eq!(Saturation::Tanh.value(0.0), 0.0);
        assert_eq!(Saturation::Tanh.slope(0.0), 1.0);
    }

    #[test]
    fn tabulated_tanh_tracks_tanh() {
        let t = TabulatedSaturation::sample(f64::tanh, 12.0, 2401).unwrap();
        let s = Saturation::Tabulated(t);
        for i in -200..=200 {
            let y = i as f64 * 0.05;
            assert!((s.value(y) - y.tanh()).abs() < 1e-6, "y = {y}");
            assert!((s.slope(y) - Saturation::Tanh.slope(y)).abs() < 1e-3, "y = {y}");
            assert_eq!(s.value(-y), -s.value(y));
        }
    }

    #[test]
    fn algebraic_sigmoid_is_accepted() {
        let f = |x: f64| x / (1.0 + x * x).sqrt();
        assert!(TabulatedSaturation::sample(f, 10.0, 4001).is_ok());
    }

    #[test]
    fn rejects_wrong_slope() {
        let err = TabulatedSaturation::sample(|x| (2.0 * x).tanh(), 10.0, 2001).unwrap_err();
        assert!(matches!(err, DynamicsError::InvalidSaturation(_)));
    }

    #[test]
    fn rejects_convex_table() {
        // S'(0) = 1 but convex for x > 0
        let err = TabulatedSaturation::sample(|x| x + x * x * x, 10.0, 2001).unwrap_err();
        assert!(matches!(err, DynamicsError::InvalidSaturation(_)));
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(TabulatedSaturation::new(vec![0.0, 1.0], vec![0.0, 0.5]).is_err());
        assert!(TabulatedSaturation::new(vec![0.1, 1.0, 2.0], vec![0.0, 0.5, 0.7]).is_err());
        assert!(TabulatedSaturation::new(vec![0.0, 1.0, 1.0], vec![0.0, 0.5, 0.7]).is_err());
    }
}
