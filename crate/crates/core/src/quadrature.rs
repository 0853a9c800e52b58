//! Gauss–Legendre rules on the unit interval and collapsed (conical product)
//! rules on the reference triangle `{(0,0), (1,0), (0,1)}`.

/// Legendre polynomial `P_n(x)` and its derivative on `[-1, 1]`.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-14 {
        // endpoint limit of the derivative
        let s = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 + 1) };
        s * n * (n + 1.0) / 2.0
    } else {
        n * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// Shifted Legendre polynomial `P_n(2s - 1)` on `[0, 1]`.
pub fn shifted_legendre(n: usize, s: f64) -> f64 {
    legendre(n, 2.0 * s - 1.0).0
}

/// A one-dimensional rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    /// `n`-point Gauss–Legendre rule, exact for degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n >= 1, "need at least one point");
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Chebyshev initial guess, then Newton
            let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            points.push(0.5 * (x + 1.0));
            weights.push(1.0 / ((1.0 - x * x) * dp * dp));
        }
        Self { points, weights }
    }

    /// Smallest Gauss rule exact for polynomials of the given degree.
    pub fn exact_to(degree: usize) -> Self {
        Self::gauss_legendre(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A rule on the reference triangle; weights sum to its area `1/2`.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Collapsed Gauss rule exact for total degree `degree`.
    ///
    /// Uses the Duffy map `(a, b) -> (a, b (1 - a))`, whose Jacobian `(1 - a)`
    /// raises the degree in `a` by one.
    pub fn exact_to(degree: usize) -> Self {
        let ra = LineRule::exact_to(degree + 1);
        let rb = LineRule::exact_to(degree);
        let mut points = Vec::with_capacity(ra.len() * rb.len());
        let mut weights = Vec::with_capacity(ra.len() * rb.len());
        for (&a, &wa) in ra.points.iter().zip(&ra.weights) {
            for (&b, &wb) in rb.points.iter().zip(&rb.weights) {
                points.push([a, b * (1.0 - a)]);
                weights.push(wa * wb * (1.0 - a));
            }
        }
        Self {
            points,
            weights,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
