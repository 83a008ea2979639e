//! Triangle and line quadrature rules.

use std::f64::consts::PI;

/// A symmetric rule on the reference triangle, given as barycentric
/// coordinates and weights that sum to one (multiply by the area).
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rule selected by point count: 1, 3, 7 or 16.
    pub fn with_points(n: usize) -> Option<Self> {
        match n {
            1 => Some(Self::centroid()),
            3 => Some(Self::strang3()),
            7 => Some(Self::dunavant7()),
            16 => Some(Self::dunavant16()),
            _ => None,
        }
    }

    pub fn centroid() -> Self {
        Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
        }
    }

    /// Degree-2 rule with interior points.
    pub fn strang3() -> Self {
        let mut r = Self::empty();
        r.push_orbit3(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
        r
    }

    /// Degree-5 rule.
    pub fn dunavant7() -> Self {
        let mut r = Self::empty();
        r.points.push([1.0 / 3.0; 3]);
        r.weights.push(0.225);
        r.push_orbit3(0.059_715_871_789_770, 0.470_142_064_105_115, 0.132_394_152_788_506);
        r.push_orbit3(0.797_426_985_353_087, 0.101_286_507_323_456, 0.125_939_180_544_827);
        r
    }

    /// Degree-8 rule.
    pub fn dunavant16() -> Self {
        let mut r = Self::empty();
        r.points.push([1.0 / 3.0; 3]);
        r.weights.push(0.144_315_607_677_787);
        r.push_orbit3(0.081_414_823_414_554, 0.459_292_588_292_723, 0.095_091_634_267_285);
        r.push_orbit3(0.658_861_384_496_480, 0.170_569_307_751_760, 0.103_217_370_534_718);
        r.push_orbit3(0.898_905_543_365_938, 0.050_547_228_317_031, 0.032_458_497_623_198);
        let (a, b, c) = (0.008_394_777_409_958, 0.263_112_829_634_638, 0.728_492_392_955_404);
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            r.points.push(p);
            r.weights.push(0.027_230_314_174_435);
        }
        r
    }

    /// Splits every point of `self` into `n²` sub-triangles (for oracles).
    pub fn subdivided(&self, n: usize) -> Self {
        let mut out = Self::empty();
        let h = 1.0 / n as f64;
        let scale = 1.0 / (n * n) as f64;
        // sub-triangles in (u, v) = (b1, b2) coordinates
        for i in 0..n {
            for j in 0..n - i {
                let (u0, v0) = (i as f64 * h, j as f64 * h);
                let mut tris = vec![[(u0, v0), (u0 + h, v0), (u0, v0 + h)]];
                if i + j + 1 < n {
                    tris.push([(u0 + h, v0), (u0 + h, v0 + h), (u0, v0 + h)]);
                }
                for t in tris {
                    for (p, w) in self.points.iter().zip(&self.weights) {
                        let u = p[0] * t[0].0 + p[1] * t[1].0 + p[2] * t[2].0;
                        let v = p[0] * t[0].1 + p[1] * t[1].1 + p[2] * t[2].1;
                        out.points.push([1.0 - u - v, u, v]);
                        out.weights.push(w * scale);
                    }
                }
            }
        }
        out
    }

    fn empty() -> Self {
        Self {
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    fn push_orbit3(&mut self, a: f64, b: f64, w: f64) {
        for p in [[a, b, b], [b, a, b], [b, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for l in 2..=n {
        let p2 = ((2 * l - 1) as f64 * z * p1 - (l - 1) as f64 * p0) / l as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
