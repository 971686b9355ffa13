//! Simple-random-walk heat kernels on a square lattice window.

/// A square window `[-r, r]²`, stored row-major with `x` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub radius: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn zeros(radius: usize) -> Self {
        let side = 2 * radius + 1;
        Self { radius, values: vec![0.0; side * side] }
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    #[inline]
    pub fn index(&self, x: i64, y: i64) -> Option<usize> {
        let r = self.radius as i64;
        if x.abs() > r || y.abs() > r {
            return None;
        }
        Some(((y + r) as usize) * self.side() + (x + r) as usize)
    }

    pub fn get(&self, x: i64, y: i64) -> f64 {
        self.index(x, y).map_or(0.0, |i| self.values[i])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// One step of the walk: `out(y) = ¼ Σ_{|e|=1} in(y − e)`, mass leaving the window is lost.
    pub fn step(&self) -> Grid {
        let side = self.side();
        let mut out = Grid::zeros(self.radius);
        for row in 0..side {
            for col in 0..side {
                let mut acc = 0.0;
                if col > 0 {
                    acc += self.values[row * side + col - 1];
                }
                if col + 1 < side {
                    acc += self.values[row * side + col + 1];
                }
                if row > 0 {
                    acc += self.values[(row - 1) * side + col];
                }
                if row + 1 < side {
                    acc += self.values[(row + 1) * side + col];
                }
                out.values[row * side + col] = 0.25 * acc;
            }
        }
        out
    }
}

/// `q_n(x) = P(S_n = x | S_0 = 0)` on `[-r, r]²`.
#[derive(Clone, Debug)]
pub struct HeatKernelTable {
    pub n: usize,
    pub grid: Grid,
    /// `1 − Σ_x q_n(x)` over the window.
    pub truncation_mass: f64,
}

impl HeatKernelTable {
    pub fn q(&self, x: i64, y: i64) -> f64 {
        self.grid.get(x, y)
    }
}

/// Exact dynamic programming for `q_n` on the window; exact whenever `n ≤ box_radius`.
pub fn srw_kernel(n: usize, box_radius: usize) -> HeatKernelTable {
    let mut g = Grid::zeros(box_radius);
    let c = g.index(0, 0).expect("origin");
    g.values[c] = 1.0;
    for _ in 0..n {
        g = g.step();
    }
    let truncation_mass = (1.0 - g.sum()).max(0.0);
    HeatKernelTable { n, grid: g, truncation_mass }
}

/// `q_{2n}(0) = (C(2n, n) / 4^n)²` for `n = 0..=count`.
pub fn return_probabilities(count: usize) -> Vec<f64> {
    let mut c = 1.0f64;
    let mut out = Vec::with_capacity(count + 1);
    out.push(1.0);
    for n in 1..=count {
        c *= (2 * n - 1) as f64 / (2 * n) as f64;
        out.push(c * c);
    }
    out
}

/// `R_N = Σ_{n=1}^N P(S_n = S'_n) = Σ_{n=1}^N q_{2n}(0)`.
pub fn overlap_r(n: usize) -> f64 {
    return_probabilities(n)[1..].iter().sum()
}
