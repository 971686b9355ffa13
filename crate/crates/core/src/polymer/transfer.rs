//! Layer-by-layer evaluation of partition functions, influences and `W`.

use serde::Serialize;

use super::field::{DisorderField, HashedDisorder};
use super::kernel::{srw_kernel, Grid};
use super::{PolymerParams, TestFunction2D};
use crate::error::{Error, Result};

/// A test function sampled at `x/√N` on the lattice square `[-r, r]²`.
#[derive(Clone, Debug)]
pub struct LatticeFunction {
    pub radius: usize,
    pub values: Vec<f64>,
}

impl LatticeFunction {
    pub fn sample(f: &TestFunction2D, n: usize) -> Self {
        let sq = (n as f64).sqrt();
        let radius = (f.support_radius() * sq).floor() as usize;
        let r = radius as i64;
        let mut values = Vec::with_capacity((2 * radius + 1).pow(2));
        for y in -r..=r {
            for x in -r..=r {
                values.push(f.eval(x as f64 / sq, y as f64 / sq));
            }
        }
        Self { radius, values }
    }

    pub fn get(&self, x: i64, y: i64) -> f64 {
        let r = self.radius as i64;
        if x.abs() > r || y.abs() > r {
            return 0.0;
        }
        self.values[(y + r) as usize * (2 * self.radius + 1) + (x + r) as usize]
    }

    pub fn is_nonneg(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    fn abs_grid(&self, box_radius: usize) -> Grid {
        let mut g = Grid::zeros(box_radius);
        let r = self.radius.min(box_radius) as i64;
        for y in -r..=r {
            for x in -r..=r {
                let i = g.index(x, y).unwrap();
                g.values[i] = self.get(x, y).abs();
            }
        }
        g
    }
}

/// One scalar observable `Z_{N;s,t}(g, h)`.
#[derive(Clone, Debug)]
pub struct ZSpec {
    pub g: TestFunction2D,
    pub h: TestFunction2D,
    pub s: f64,
    pub t: f64,
}

impl ZSpec {
    pub fn new(g: TestFunction2D, h: TestFunction2D) -> Self {
        Self { g, h, s: 0.0, t: 1.0 }
    }

    pub fn with_times(g: TestFunction2D, h: TestFunction2D, s: f64, t: f64) -> Self {
        Self { g, h, s, t }
    }

    pub fn support_radius(&self) -> f64 {
        self.g.support_radius().max(self.h.support_radius())
    }
}

/// Layer range and per-layer window radii.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub n: usize,
    pub box_radius: usize,
    pub first: usize,
    pub windows: Vec<usize>,
}

impl Plan {
    pub fn steps(&self) -> usize {
        self.windows.len() - 1
    }
}

/// `√(k ln(4/tol))`: beyond this sup-norm distance a `k`-step walk has mass
/// below `tol`. Each coordinate step has `E e^{λX} = cosh²(λ/2) ≤ e^{λ²/4}`.
fn diffusive_reach(k: usize, tol: f64) -> usize {
    (k as f64 * (4.0 / tol).ln()).sqrt().ceil() as usize
}

pub(crate) fn layer_range(n: usize, s: f64, t: f64) -> Result<(usize, usize)> {
    if !(0.0 <= s && s < t && t <= 1.0) {
        return Err(Error::OutOfRange { what: "times", detail: format!("need 0 <= s < t <= 1, got s={s}, t={t}") });
    }
    let nf = n as f64;
    let first = (nf * s).ceil() as usize;
    let last = ((nf * t).floor() as usize).max(first);
    Ok((first, last))
}

/// Windows are the intersection of the box, the light cones of both supports
/// and their diffusive cones at level `tol`.
pub(crate) fn plan(
    params: &PolymerParams,
    box_radius: usize,
    spec: &ZSpec,
    g: &LatticeFunction,
    h: &LatticeFunction,
) -> Result<Plan> {
    let (first, last) = layer_range(params.n, spec.s, spec.t)?;
    let steps = last - first;
    for (lat, f) in [(g, &spec.g), (h, &spec.h)] {
        if lat.radius > box_radius {
            return Err(Error::SupportEscape { needed: f.support_radius() * (params.n as f64).sqrt(), box_radius });
        }
    }
    let tol = params.trunc_tol;
    let reach = |k: usize| k.min(diffusive_reach(k, tol));
    let windows = (0..=steps)
        .map(|j| box_radius.min(g.radius + reach(j)).min(h.radius + reach(steps - j)))
        .collect();
    Ok(Plan { n: params.n, box_radius, first, windows })
}

/// Two padded buffers; values outside the active window are zero.
#[derive(Clone)]
pub(crate) struct Engine {
    r: usize,
    stride: usize,
    cur: Vec<f64>,
    nxt: Vec<f64>,
    w: usize,
    nxt_w: Option<usize>,
}

impl Engine {
    pub fn new(box_radius: usize, g: &LatticeFunction, w0: usize) -> Self {
        let stride = 2 * box_radius + 3;
        let mut e = Self {
            r: box_radius,
            stride,
            cur: vec![0.0; stride * stride],
            nxt: vec![0.0; stride * stride],
            w: w0,
            nxt_w: None,
        };
        let r = g.radius.min(w0) as i64;
        for y in -r..=r {
            for x in -r..=r {
                let i = e.idx(x, y);
                e.cur[i] = g.get(x, y);
            }
        }
        e
    }

    #[inline]
    fn idx(&self, x: i64, y: i64) -> usize {
        let o = self.r as i64 + 1;
        ((y + o) as usize) * self.stride + (x + o) as usize
    }

    fn clear_outside(&mut self, inner: usize) {
        let Some(outer) = self.nxt_w else { return };
        if outer <= inner {
            return;
        }
        let (o, i) = (outer as i64, inner as i64);
        for y in -o..=o {
            let row = self.idx(0, y);
            let (a, b) = (row - outer, row + outer);
            if y.abs() > i {
                self.nxt[a..=b].fill(0.0);
            } else {
                self.nxt[a..row - inner].fill(0.0);
                self.nxt[row + inner + 1..=b].fill(0.0);
            }
        }
    }

    /// Advances one layer onto window `w`; `weights[atoms[k]]` multiplies the
    /// `k`-th site of the window in row-major order.
    pub fn step(&mut self, w: usize, site: Option<(&[u8], &[f64])>) {
        self.clear_outside(w);
        let s = self.stride;
        let wi = w as i64;
        let width = 2 * w + 1;
        for (row_k, y) in (-wi..=wi).enumerate() {
            let start = self.idx(-wi, y);
            let cur = &self.cur;
            let up = &cur[start - s..start - s + width];
            let down = &cur[start + s..start + s + width];
            let left = &cur[start - 1..start - 1 + width];
            let right = &cur[start + 1..start + 1 + width];
            let out = &mut self.nxt[start..start + width];
            match site {
                Some((atoms, weights)) => {
                    let a = &atoms[row_k * width..(row_k + 1) * width];
                    for k in 0..width {
                        out[k] = 0.25 * (left[k] + right[k] + up[k] + down[k]) * weights[a[k] as usize];
                    }
                }
                None => {
                    for k in 0..width {
                        out[k] = 0.25 * (left[k] + right[k] + up[k] + down[k]);
                    }
                }
            }
        }
        std::mem::swap(&mut self.cur, &mut self.nxt);
        self.nxt_w = Some(self.w);
        self.w = w;
    }

    /// `(1/N) Σ_y u(y) h(y/√N)`.
    pub fn finish(&self, h: &LatticeFunction, n: usize) -> f64 {
        let r = h.radius.min(self.w) as i64;
        let mut acc = 0.0;
        for y in -r..=r {
            for x in -r..=r {
                acc += self.cur[self.idx(x, y)] * h.get(x, y);
            }
        }
        acc / n as f64
    }
}

/// A spec sampled on the lattice with its plan, reusable across replicates.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    pub plan: Plan,
    pub g: LatticeFunction,
    pub h: LatticeFunction,
}

impl Prepared {
    pub fn new(params: &PolymerParams, box_radius: usize, spec: &ZSpec) -> Result<Self> {
        let g = LatticeFunction::sample(&spec.g, params.n);
        let h = LatticeFunction::sample(&spec.h, params.n);
        let plan = plan(params, box_radius, spec, &g, &h)?;
        Ok(Self { plan, g, h })
    }

    pub fn engine(&self) -> Engine {
        Engine::new(self.plan.box_radius, &self.g, self.plan.windows[0])
    }

    /// Evaluates with atoms supplied per `(layer, window)`. `weights = None` is `β = 0`.
    pub fn eval(&self, weights: Option<&[f64]>, mut fill: impl FnMut(usize, usize, &mut Vec<u8>)) -> f64 {
        let mut e = self.engine();
        let mut atoms = Vec::new();
        for j in 1..=self.plan.steps() {
            let w = self.plan.windows[j];
            match weights {
                Some(wt) => {
                    fill(self.plan.first + j, w, &mut atoms);
                    e.step(w, Some((&atoms, wt)));
                }
                None => e.step(w, None),
            }
        }
        e.finish(&self.h, self.plan.n)
    }

    pub fn eval_hashed(&self, weights: &[f64], d: &HashedDisorder) -> f64 {
        self.eval(Some(weights), |layer, w, out| d.fill(layer, w, out))
    }

    /// `(Z(ω), Z(ω^ε))` for one replicate.
    pub fn eval_pair(&self, weights: &[f64], d: &HashedDisorder, eps: f64) -> (f64, f64) {
        let mut a = self.engine();
        let mut b = a.clone();
        let (mut om, mut no) = (Vec::new(), Vec::new());
        for j in 1..=self.plan.steps() {
            let w = self.plan.windows[j];
            d.fill_pair(self.plan.first + j, w, eps, &mut om, &mut no);
            a.step(w, Some((&om, weights)));
            b.step(w, Some((&no, weights)));
        }
        (a.finish(&self.h, self.plan.n), b.finish(&self.h, self.plan.n))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionResult {
    pub value: f64,
    pub params_hash: u64,
    pub seed: u64,
}

/// `Z_{N;s,t}(g, h)` for a materialized field.
pub fn partition_function(
    field: &DisorderField,
    params: &PolymerParams,
    g: &TestFunction2D,
    h: &TestFunction2D,
    s: f64,
    t: f64,
) -> Result<PartitionResult> {
    if field.n != params.n {
        return Err(Error::DimensionMismatch { expected: params.n, got: field.n });
    }
    let spec = ZSpec::with_times(g.clone(), h.clone(), s, t);
    let prep = Prepared::new(params, field.box_radius, &spec)?;
    let weights = params.weights();
    let wt = (params.beta_n != 0.0).then_some(weights.as_slice());
    let value = prep.eval(wt, |layer, w, out| field.fill(layer, w, out));
    Ok(PartitionResult { value, params_hash: params.fingerprint(), seed: field.seed })
}

/// Same value as [`partition_function`] on the field materialized from `(seed, replicate)`.
pub fn partition_value_hashed(params: &PolymerParams, spec: &ZSpec, seed: u64, replicate: u64) -> Result<f64> {
    let prep = Prepared::new(params, params.box_radius(spec.support_radius()), spec)?;
    let d = HashedDisorder::new(&params.disorder_law, seed, replicate);
    if params.beta_n == 0.0 {
        return Ok(prep.eval(None, |_, _, _| {}));
    }
    Ok(prep.eval_hashed(&params.weights(), &d))
}

/// `(1/N) Σ_{x₀,y₀} g(x₀/√N) q_J(y₀ − x₀) h(y₀/√N)` with `J = ⌊Nt⌋ − ⌈Ns⌉`.
pub fn kernel_formula_value(params: &PolymerParams, spec: &ZSpec) -> Result<f64> {
    let (first, last) = layer_range(params.n, spec.s, spec.t)?;
    let steps = last - first;
    let g = LatticeFunction::sample(&spec.g, params.n);
    let h = LatticeFunction::sample(&spec.h, params.n);
    let kr = steps.min(g.radius + h.radius + diffusive_reach(steps, 1e-17));
    let q = srw_kernel(steps, kr);
    let (rg, rh) = (g.radius as i64, h.radius as i64);
    let mut acc = 0.0;
    for y0 in -rh..=rh {
        for x0 in -rh..=rh {
            let hv = h.get(x0, y0);
            if hv == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for y1 in -rg..=rg {
                for x1 in -rg..=rg {
                    inner += g.get(x1, y1) * q.q(x0 - x1, y0 - y1);
                }
            }
            acc += inner * hv;
        }
    }
    Ok(acc / params.n as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolymerInfluence {
    /// `None` when `g` or `h` takes negative values.
    pub exact: Option<f64>,
    pub bound: f64,
}

fn walk_grid(mut g: Grid, steps: usize) -> Grid {
    for _ in 0..steps {
        g = g.step();
    }
    g
}

/// `L¹` influence of `ω(n, z)` on `Z_{N;0,1}(g, h)` and its bound
/// `(σ_N/N) Σ |g| q_n(z − x₀) q_{N−n}(y₀ − z) |h|`.
pub fn polymer_influence(params: &PolymerParams, g: &TestFunction2D, h: &TestFunction2D, n: usize, z: (i64, i64)) -> Result<PolymerInfluence> {
    let spec = ZSpec::new(g.clone(), h.clone());
    let r = params.box_radius(spec.support_radius());
    let gl = LatticeFunction::sample(g, params.n);
    let hl = LatticeFunction::sample(h, params.n);
    let signed = !(gl.is_nonneg() && hl.is_nonneg());
    if n == 0 || n > params.n {
        return Ok(PolymerInfluence { exact: (!signed).then_some(0.0), bound: 0.0 });
    }
    let a = walk_grid(gl.abs_grid(r), n).get(z.0, z.1);
    let b = walk_grid(hl.abs_grid(r), params.n - n).get(z.0, z.1);
    let nf = params.n as f64;
    let bound = params.sigma_n / nf * a * b;
    let exact = (!signed).then_some(params.zeta_abs_mean() / nf * a * b);
    Ok(PolymerInfluence { exact, bound })
}

/// `W = Σ_{(n,z)} Inf¹_{(n,z)}²` from a forward sweep of `|g|` and a backward
/// sweep of `|h|`; forward layers are recomputed from `√N` checkpoints.
pub fn polymer_w(params: &PolymerParams, g: &TestFunction2D, h: &TestFunction2D) -> Result<f64> {
    let spec = ZSpec::new(g.clone(), h.clone());
    let r = params.box_radius(spec.support_radius());
    let gl = LatticeFunction::sample(g, params.n);
    let hl = LatticeFunction::sample(h, params.n);
    if !(gl.is_nonneg() && hl.is_nonneg()) {
        return Err(Error::SignedTestFunction);
    }
    for (lat, f) in [(&gl, g), (&hl, h)] {
        if lat.radius > r {
            return Err(Error::SupportEscape { needed: f.support_radius() * (params.n as f64).sqrt(), box_radius: r });
        }
    }
    let n = params.n;
    let k = (n as f64).sqrt().ceil() as usize;
    let mut checkpoints = Vec::new();
    let mut a = gl.abs_grid(r);
    for layer in 0..=n {
        if layer % k == 0 {
            checkpoints.push(a.clone());
        }
        if layer < n {
            a = a.step();
        }
    }
    let mut b = hl.abs_grid(r);
    let mut total = 0.0;
    let mut layer = n;
    for (ci, start) in checkpoints.iter().enumerate().rev() {
        let lo = ci * k;
        let mut block = vec![start.clone()];
        for _ in lo..layer {
            let next = block.last().unwrap().step();
            block.push(next);
        }
        loop {
            if layer >= 1 {
                let an = &block[layer - lo];
                total += an.values.iter().zip(&b.values).map(|(x, y)| (x * y) * (x * y)).sum::<f64>();
            }
            if layer == lo {
                break;
            }
            b = b.step();
            layer -= 1;
        }
        if lo > 0 {
            b = b.step();
            layer -= 1;
        }
    }
    let c = params.zeta_abs_mean() / n as f64;
    Ok(c * c * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::FiniteLaw;

    fn small(n: usize) -> PolymerParams {
        PolymerParams::new(n, -1.0, FiniteLaw::rademacher(), 1e-12).unwrap()
    }

    #[test]
    fn free_sweep_matches_kernel_formula() {
        let p = small(36).free();
        let spec = ZSpec::new(TestFunction2D::bump(0.8), TestFunction2D::smoothed_square(1.0, 0.2));
        let z = partition_value_hashed(&p, &spec, 0, 0).unwrap();
        let k = kernel_formula_value(&p, &spec).unwrap();
        assert!((z - k).abs() < 1e-12 * k, "{z} vs {k}");
        let spec2 = ZSpec::with_times(TestFunction2D::bump(0.8), TestFunction2D::bump(0.6), 0.25, 0.8);
        let z = partition_value_hashed(&p, &spec2, 0, 0).unwrap();
        let k = kernel_formula_value(&p, &spec2).unwrap();
        assert!((z - k).abs() < 1e-12 * k);
    }

    #[test]
    fn field_and_hashed_agree() {
        let p = small(25);
        let spec = ZSpec::new(TestFunction2D::bump(0.6), TestFunction2D::bump(0.6));
        let r = p.box_radius(0.6);
        let field = DisorderField::from_seed(&p.disorder_law, 25, r, 5, 3);
        let a = partition_function(&field, &p, &spec.g, &spec.h, 0.0, 1.0).unwrap().value;
        let b = partition_value_hashed(&p, &spec, 5, 3).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn support_escape() {
        let p = small(16);
        let field = DisorderField::from_seed(&p.disorder_law, 16, 2, 0, 0);
        let g = TestFunction2D::bump(1.0);
        let err = partition_function(&field, &p, &g, &g, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::SupportEscape { .. }));
    }

    #[test]
    fn influence_equality_for_two_point_law() {
        let p = small(16);
        let g = TestFunction2D::bump(0.7);
        let inf = polymer_influence(&p, &g, &g, 8, (0, 1)).unwrap();
        assert!((inf.exact.unwrap() / inf.bound - 1.0).abs() < 1e-12);
        assert_eq!(polymer_influence(&p, &g, &g, 0, (0, 0)).unwrap().bound, 0.0);
        assert_eq!(polymer_influence(&p, &g, &g, 17, (0, 0)).unwrap().bound, 0.0);
        let signed = TestFunction2D::custom("signed", 0.5, |x, _| x);
        let inf = polymer_influence(&p, &signed, &g, 8, (0, 0)).unwrap();
        assert!(inf.exact.is_none());
        assert!(matches!(polymer_w(&p, &signed, &g), Err(Error::SignedTestFunction)));
    }

    #[test]
    fn w_matches_per_site_sum() {
        let p = small(9);
        let g = TestFunction2D::bump(0.9);
        let h = TestFunction2D::smoothed_square(0.8, 0.3);
        let w = polymer_w(&p, &g, &h).unwrap();
        let r = p.box_radius(g.support_radius().max(h.support_radius())) as i64;
        let mut direct = 0.0;
        for n in 1..=9 {
            for y in -r..=r {
                for x in -r..=r {
                    direct += polymer_influence(&p, &g, &h, n, (x, y)).unwrap().exact.unwrap().powi(2);
                }
            }
        }
        assert!((w - direct).abs() < 1e-12 * direct, "{w} vs {direct}");
        assert_eq!(polymer_w(&p.free(), &g, &h).unwrap(), 0.0);
    }
}
