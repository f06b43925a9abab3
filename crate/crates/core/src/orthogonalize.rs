//! The Wronski orthogonalization process and the Gram-Schmidt baseline.
//!
//! Stage `k` prescribes `W(f1..f_{k-1}, y) = h_{k-1} W(f1..f_{k-1})`. Its
//! particular solution with zero initial data at `x0` is
//!
//! ```text
//! F(x) = Σ_j f_j(x) I_j(x),   I_j(x) = ∫_{x0}^{x} (W_j / W)(t) h(t) dt
//! ```
//!
//! and `f_k = F - Σ_i f_i ρ(f_i, F) / ‖f_i‖²` removes the components along
//! the earlier functions. Derivatives of `F` come from the product rule with
//! `I_j' = (W_j / W) h`, so later stages can keep taking Wronskians of
//! constructed functions.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::analysis::{CumulativeIntegral, InnerProduct};
use crate::expr::Expression;
use crate::jet::Jet;
use crate::wronskian::{variation_integrands_of_columns, MapKind, SmoothMap, WronskiFrame};
use crate::{Error, Result};

/// Order of the Taylor expansion that closes each running integral between
/// its nearest mesh checkpoint and the query point.
pub const TAIL_ORDER: usize = 12;

/// Checkpoint mesh panels per unit interval length of the space.
pub const MESH_PANELS: usize = 32;

pub const DEFAULT_GRID_POINTS: usize = 257;

/// Relative residual norm below which a Gram-Schmidt input counts as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;

struct PointCache<T> {
    map: Mutex<HashMap<u64, (usize, Arc<T>)>>,
}

impl<T> PointCache<T> {
    fn new() -> Self {
        Self {
            map: Mutex::new(HashMap::new()),
        }
    }

    fn get(&self, x: f64, order: usize) -> Option<Arc<T>> {
        let map = self.map.lock().expect("point cache lock");
        map.get(&x.to_bits())
            .filter(|(have, _)| *have >= order)
            .map(|(_, v)| Arc::clone(v))
    }

    fn insert(&self, x: f64, order: usize, value: Arc<T>) {
        let mut map = self.map.lock().expect("point cache lock");
        let slot = map.entry(x.to_bits()).or_insert((order, Arc::clone(&value)));
        if slot.0 < order {
            *slot = (order, value);
        }
    }
}

/// Linear combination `Σ c_i g_i` of smooth maps.
#[derive(Debug, Clone)]
pub struct LinearCombination {
    terms: Vec<(f64, Arc<dyn SmoothMap>)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, Arc<dyn SmoothMap>)>) -> Self {
        assert!(!terms.is_empty(), "empty linear combination");
        Self { terms }
    }

    pub fn scaled(f: Arc<dyn SmoothMap>, c: f64) -> Self {
        Self::new(vec![(c, f)])
    }

    pub fn terms(&self) -> &[(f64, Arc<dyn SmoothMap>)] {
        &self.terms
    }
}

impl SmoothMap for LinearCombination {
    fn eval_jet(&self, x: f64, order: usize) -> Result<Jet> {
        let (c0, f0) = &self.terms[0];
        let mut acc = f0.eval_jet(x, order)?.scale(*c0);
        for (c, f) in &self.terms[1..] {
            acc = acc.add_scaled(&f.eval_jet(x, order)?, *c)?;
        }
        Ok(acc)
    }

    fn kind(&self) -> MapKind {
        MapKind::Combination
    }
}

struct VariationIntegrands {
    frame: WronskiFrame,
    h: Expression,
    cache: PointCache<Vec<Jet>>,
}

impl VariationIntegrands {
    fn jets(&self, t: f64, order: usize) -> Result<Arc<Vec<Jet>>> {
        let order = order.max(TAIL_ORDER);
        if let Some(hit) = self.cache.get(t, order) {
            return Ok(hit);
        }
        let cols = self.frame.columns(t, order)?;
        let h = self.h.eval_jet(t, order)?;
        let g = Arc::new(variation_integrands_of_columns(&cols, &h, order)?);
        self.cache.insert(t, order, Arc::clone(&g));
        Ok(g)
    }
}

/// The particular solution `F_{h, f1..fn}` with `F(x0) = 0`.
pub struct VariationSolution {
    integrands: Arc<VariationIntegrands>,
    integrals: Vec<CumulativeIntegral>,
    base_point: f64,
    cache: PointCache<Jet>,
}

impl fmt::Debug for VariationSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VariationSolution")
            .field("predecessors", &self.integrands.frame.len())
            .field("h", &self.integrands.h.source())
            .field("base_point", &self.base_point)
            .finish()
    }
}

impl VariationSolution {
    pub fn predecessors(&self) -> &[Arc<dyn SmoothMap>] {
        self.integrands.frame.functions()
    }

    pub fn weight(&self) -> &Expression {
        &self.integrands.h
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    /// Jets of `(W_j / W) h` at `x`, j = 1..n.
    pub fn integrand_jets(&self, x: f64, order: usize) -> Result<Vec<Jet>> {
        let g = self.integrands.jets(x, order)?;
        Ok(g.iter().map(|j| j.truncate(order)).collect())
    }

    /// The running integrals `I_j(x)`.
    pub fn integral_values(&self, x: f64) -> Result<Vec<f64>> {
        let g = self.integrands.jets(x, TAIL_ORDER)?;
        self.integrals
            .iter()
            .zip(g.iter())
            .map(|(integral, gj)| {
                // fixed order keeps values independent of the requested jet order
                integral.value_with_tail(x, |c| Ok(gj.truncate(TAIL_ORDER).integrate_back(x - c)))
            })
            .collect()
    }
}

impl SmoothMap for VariationSolution {
    fn eval_jet(&self, x: f64, order: usize) -> Result<Jet> {
        if let Some(hit) = self.cache.get(x, order) {
            return Ok(hit.truncate(order));
        }
        let g_order = TAIL_ORDER.max(order.saturating_sub(1));
        let full = g_order + 1;
        let g = self.integrands.jets(x, g_order)?;
        let values = self.integral_values(x)?;
        let mut acc = Jet::constant(x, 0.0, full);
        for ((f, gj), value) in self.predecessors().iter().zip(g.iter()).zip(values) {
            let integral = gj.truncate(g_order).antiderivative_shift(value);
            acc = acc.add(&f.eval_jet(x, full)?.mul(&integral)?)?;
        }
        let jet = Arc::new(acc);
        self.cache.insert(x, full, Arc::clone(&jet));
        Ok(jet.truncate(order))
    }

    fn kind(&self) -> MapKind {
        MapKind::Constructed {
            stage: self.predecessors().len() + 1,
        }
    }
}

/// Variation-of-parameters particular solution for the frame `prev` and weight `h`.
pub fn build_f(
    prev: &[Arc<dyn SmoothMap>],
    h: &Expression,
    x0: f64,
    ip: &InnerProduct,
) -> Result<Arc<VariationSolution>> {
    let frame = WronskiFrame::new(prev.to_vec())?;
    let n = frame.len();
    let integrands = Arc::new(VariationIntegrands {
        frame,
        h: h.clone(),
        cache: PointCache::new(),
    });
    let (a, b) = ip.interval();
    let spacing = (b - a) / MESH_PANELS as f64;
    let integrals = (0..n)
        .map(|j| {
            let source = Arc::clone(&integrands);
            let integrand = Box::new(move |t: f64| Ok(source.jets(t, 0)?[j].value()));
            CumulativeIntegral::new(integrand, x0, spacing, ip.options())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(VariationSolution {
        integrands,
        integrals,
        base_point: x0,
        cache: PointCache::new(),
    }))
}

/// `f_k = F + Σ c_i f_i`.
pub struct ConstructedFunction {
    stage: usize,
    solution: Arc<VariationSolution>,
    coefficients: Vec<f64>,
    cache: PointCache<Jet>,
}

impl fmt::Debug for ConstructedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstructedFunction")
            .field("stage", &self.stage)
            .field("coefficients", &self.coefficients)
            .finish()
    }
}

impl ConstructedFunction {
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn solution(&self) -> &Arc<VariationSolution> {
        &self.solution
    }
}

impl SmoothMap for ConstructedFunction {
    fn eval_jet(&self, x: f64, order: usize) -> Result<Jet> {
        if let Some(hit) = self.cache.get(x, order) {
            return Ok(hit.truncate(order));
        }
        let full = order.max(TAIL_ORDER + 1);
        let mut acc = self.solution.eval_jet(x, full)?;
        for (c, f) in self.coefficients.iter().zip(self.solution.predecessors()) {
            acc = acc.add_scaled(&f.eval_jet(x, full)?, *c)?;
        }
        let jet = Arc::new(acc);
        self.cache.insert(x, full, Arc::clone(&jet));
        Ok(jet.truncate(order))
    }

    fn kind(&self) -> MapKind {
        MapKind::Constructed { stage: self.stage }
    }
}

/// Projects `F` off the (mutually orthogonal) predecessors using their cached norms.
pub fn orthogonalize_step(
    prev: &[Arc<dyn SmoothMap>],
    norms: &[f64],
    f: Arc<VariationSolution>,
    ip: &InnerProduct,
) -> Result<ConstructedFunction> {
    assert_eq!(prev.len(), norms.len(), "one norm per predecessor");
    let mut coefficients = Vec::with_capacity(prev.len());
    for (fi, &norm) in prev.iter().zip(norms) {
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroNorm { norm_sq: norm * norm });
        }
        coefficients.push(-ip.inner(fi.as_ref(), f.as_ref())? / (norm * norm));
    }
    Ok(ConstructedFunction {
        stage: prev.len() + 1,
        solution: f,
        coefficients,
        cache: PointCache::new(),
    })
}

/// Everything needed to run the construction.
#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub seed: Expression,
    pub n: usize,
    /// `h_1 .. h_{N-1}`.
    pub h_specs: Vec<Expression>,
    pub x0: f64,
    pub ip: InnerProduct,
    pub normalize: bool,
    /// Density of the sampled admissibility checks and the validation grid.
    pub grid_points: usize,
}

impl BuildConfig {
    /// Defaults: every `h ≡ 1`, `x0` at the midpoint, unnormalized.
    pub fn new(seed: Expression, n: usize, ip: InnerProduct) -> Self {
        let (a, b) = ip.interval();
        Self {
            seed,
            n,
            h_specs: vec![Expression::constant(1.0); n.saturating_sub(1)],
            x0: 0.5 * (a + b),
            ip,
            normalize: false,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.ip.interval();
        if self.n == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if self.h_specs.len() != self.n - 1 {
            return Err(Error::InvalidConfig(format!(
                "expected {} weight functions h for N = {}, got {}",
                self.n - 1,
                self.n,
                self.h_specs.len()
            )));
        }
        if !(self.x0 >= a && self.x0 <= b) {
            return Err(Error::InvalidConfig(format!("x0 = {} lies outside [{a}, {b}]", self.x0)));
        }
        if self.grid_points == 0 {
            return Err(Error::InvalidConfig("grid_points must be positive".into()));
        }
        Ok(())
    }

    /// `grid_points` interior points plus both endpoints.
    pub fn sample_grid(&self) -> Vec<f64> {
        let (a, b) = self.ip.interval();
        let steps = self.grid_points + 1;
        (0..=steps)
            .map(|i| if i == steps { b } else { a + (b - a) * i as f64 / steps as f64 })
            .collect()
    }
}

/// First grid location where `f` vanishes, refining sign changes by bisection.
fn find_zero(f: &Expression, grid: &[f64]) -> Result<Option<f64>> {
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let v = f.eval(x)?;
        if v == 0.0 {
            return Ok(Some(x));
        }
        if let Some((px, pv)) = prev {
            if pv.signum() != v.signum() {
                let (mut lo, mut hi, mut flo) = (px, x, pv);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = f.eval(mid)?;
                    if fm == 0.0 {
                        return Ok(Some(mid));
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Some(0.5 * (lo + hi)));
            }
        }
        prev = Some((x, v));
    }
    Ok(None)
}

/// Construction record for stages `k >= 2`.
#[derive(Debug, Clone)]
pub struct StageRecord {
    pub solution: Arc<VariationSolution>,
    pub coefficients: Vec<f64>,
}

/// An ordered family `f1..fN` with its Gram matrix and construction metadata.
#[derive(Debug, Clone)]
pub struct OrthoSystem {
    config: BuildConfig,
    functions: Vec<Arc<dyn SmoothMap>>,
    stages: Vec<Option<StageRecord>>,
    seed_scale: f64,
    scales: Vec<f64>,
    norms: Vec<f64>,
    gram: Vec<Vec<f64>>,
}

fn gram_matrix(functions: &[Arc<dyn SmoothMap>], ip: &InnerProduct) -> Result<Vec<Vec<f64>>> {
    let n = functions.len();
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = ip.inner(functions[i].as_ref(), functions[j].as_ref())?;
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }
    Ok(gram)
}

impl OrthoSystem {
    /// Wraps an arbitrary family (no construction metadata), computing its Gram matrix.
    pub fn from_functions(config: BuildConfig, functions: Vec<Arc<dyn SmoothMap>>) -> Result<Self> {
        let n = functions.len();
        Self::assemble(config, functions, vec![None; n], 1.0, vec![1.0; n])
    }

    fn assemble(
        config: BuildConfig,
        functions: Vec<Arc<dyn SmoothMap>>,
        stages: Vec<Option<StageRecord>>,
        seed_scale: f64,
        scales: Vec<f64>,
    ) -> Result<Self> {
        let gram = gram_matrix(&functions, &config.ip)?;
        let norms = gram.iter().enumerate().map(|(i, row)| row[i].max(0.0).sqrt()).collect();
        Ok(Self {
            config,
            functions,
            stages,
            seed_scale,
            scales,
            norms,
            gram,
        })
    }

    pub fn config(&self) -> &BuildConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[Arc<dyn SmoothMap>] {
        &self.functions
    }

    pub fn function(&self, i: usize) -> &Arc<dyn SmoothMap> {
        &self.functions[i]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn gram(&self) -> &[Vec<f64>] {
        &self.gram
    }

    /// Record of stage `k` (1-based); `None` for the seed or for families not built here.
    pub fn stage(&self, k: usize) -> Option<&StageRecord> {
        self.stages.get(k - 1).and_then(|s| s.as_ref())
    }

    /// Projection coefficients per stage; the seed stage has none.
    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        self.stages
            .iter()
            .map(|s| s.as_ref().map(|r| r.coefficients.clone()).unwrap_or_default())
            .collect()
    }

    /// Factor applied to the seed before the construction started.
    pub fn seed_scale(&self) -> f64 {
        self.seed_scale
    }

    /// Factors applied to each constructed function afterwards.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Same family with `f_index` replaced; Gram matrix and norms are recomputed.
    pub fn with_function(&self, index: usize, f: Arc<dyn SmoothMap>) -> Result<Self> {
        let mut functions = self.functions.clone();
        functions[index] = f;
        Self::assemble(
            self.config.clone(),
            functions,
            self.stages.clone(),
            self.seed_scale,
            self.scales.clone(),
        )
    }

    /// `f2 <- f2 + eps * f1`, a deliberate orthogonality defect.
    pub fn perturbed(&self, eps: f64) -> Result<Self> {
        if self.len() < 2 {
            return Ok(self.clone());
        }
        let combo = LinearCombination::new(vec![
            (1.0, Arc::clone(&self.functions[1])),
            (eps, Arc::clone(&self.functions[0])),
        ]);
        self.with_function(1, Arc::new(combo))
    }
}

/// Runs the full construction `f1..fN`.
pub fn build_system(config: &BuildConfig) -> Result<OrthoSystem> {
    config.validate()?;
    let ip = &config.ip;
    let grid = config.sample_grid();

    if let Some(x) = find_zero(&config.seed, &grid).map_err(|e| e.at_stage(1))? {
        return Err(Error::SeedVanishes { x }.at_stage(1));
    }
    let seed: Arc<dyn SmoothMap> = Arc::new(config.seed.clone());
    let seed_norm = ip.norm(seed.as_ref()).map_err(|e| e.at_stage(1))?;
    let (first, seed_scale): (Arc<dyn SmoothMap>, f64) = if config.normalize {
        (Arc::new(LinearCombination::scaled(seed, 1.0 / seed_norm)), 1.0 / seed_norm)
    } else {
        (seed, 1.0)
    };
    let mut functions = vec![first];
    let mut norms = vec![seed_norm * seed_scale];
    let mut stages = vec![None];

    for (i, h) in config.h_specs.iter().enumerate() {
        let stage = i + 2;
        let run = || -> Result<(ConstructedFunction, f64)> {
            if let Some(x) = find_zero(h, &grid)? {
                return Err(Error::WeightVanishes { index: i + 1, x });
            }
            let f = build_f(&functions, h, config.x0, ip)?;
            let fk = orthogonalize_step(&functions, &norms, f, ip)?;
            let norm = ip.norm(&fk)?;
            Ok((fk, norm))
        };
        let (fk, norm) = run().map_err(|e| e.at_stage(stage))?;
        stages.push(Some(StageRecord {
            solution: Arc::clone(fk.solution()),
            coefficients: fk.coefficients().to_vec(),
        }));
        functions.push(Arc::new(fk));
        norms.push(norm);
    }

    let n = functions.len();
    let system = OrthoSystem::assemble(config.clone(), functions, stages, seed_scale, vec![1.0; n])?;
    if config.normalize {
        normalize_system(&system)
    } else {
        Ok(system)
    }
}

/// Scales every member to unit norm.
pub fn normalize_system(sys: &OrthoSystem) -> Result<OrthoSystem> {
    let (a, b) = sys.config.ip.interval();
    let floor = sys.config.ip.quad_tol() * (b - a);
    let mut functions = Vec::with_capacity(sys.len());
    let mut scales = Vec::with_capacity(sys.len());
    for (i, f) in sys.functions.iter().enumerate() {
        let norm = sys.norms[i];
        if norm.is_nan() || norm * norm <= floor {
            return Err(Error::ZeroNorm { norm_sq: norm * norm });
        }
        functions.push(Arc::new(LinearCombination::scaled(Arc::clone(f), 1.0 / norm)) as Arc<dyn SmoothMap>);
        scales.push(sys.scales[i] / norm);
    }
    OrthoSystem::assemble(
        sys.config.clone(),
        functions,
        sys.stages.clone(),
        sys.seed_scale,
        scales,
    )
}

/// Classical Gram-Schmidt: `g_k = f_k - Σ_{i<k} g_i ρ(f_k, g_i) / ‖g_i‖²`.
///
/// Each output is stored as a flat combination of the inputs.
pub fn gram_schmidt(fs: &[Arc<dyn SmoothMap>], ip: &InnerProduct) -> Result<Vec<Arc<dyn SmoothMap>>> {
    let (a, b) = ip.interval();
    let mut out: Vec<Arc<dyn SmoothMap>> = Vec::with_capacity(fs.len());
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(fs.len());
    let mut norms_sq: Vec<f64> = Vec::with_capacity(fs.len());
    for (k, f) in fs.iter().enumerate() {
        let mut row = vec![0.0; k + 1];
        row[k] = 1.0;
        for (i, g) in out.iter().enumerate() {
            let c = ip.inner(f.as_ref(), g.as_ref())? / norms_sq[i];
            for (r, gi) in row.iter_mut().zip(&rows[i]) {
                *r -= c * gi;
            }
        }
        let terms = row.iter().zip(fs).map(|(&c, f)| (c, Arc::clone(f))).collect();
        let g: Arc<dyn SmoothMap> = Arc::new(LinearCombination::new(terms));
        let input_sq = ip.integrate_weighted(|x| f.value(x).map(|v| v * v))?;
        let residual_sq = ip.integrate_weighted(|x| g.value(x).map(|v| v * v))?;
        if residual_sq <= DEPENDENCE_TOL * DEPENDENCE_TOL * input_sq
            || residual_sq <= ip.quad_tol() * (b - a)
        {
            return Err(Error::DependentInput { index: k + 1 });
        }
        out.push(g);
        rows.push(row);
        norms_sq.push(residual_sq);
    }
    Ok(out)
}
