//! Configured pipelines, step-wise metrics and work profiles. The command
//! line tool is a thin layer over this module.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::edcs::{BatchEdcsMatcher, DamagedEdcs, EdcsError, EdcsParams, StrictMode};
use crate::graph::{DynamicGraph, Edge, GraphError, UpdateEvent, UpdateKind};
use crate::matcher::MatcherState;
use crate::oracle::{check_damaged_edcs, check_matching, mu, Matching};
use crate::scheduler::{k_for_length, BatchAlgorithm, BatchScheduler, SchedError};
use crate::uniform::{weight_cap, BatchUniformMatcher, UniformError, UniformParams, UniformSparsifier};
use crate::vsparsify::reduction::{random_source, CellMatcher, ReductionConfig, VertexSparsifier};
use crate::work;

pub const CSV_HEADER: &str = "step,work_units,matching_size,mu_exact,ratio,rebuild_flag";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Edcs(#[from] EdcsError),
    #[error(transparent)]
    Uniform(#[from] UniformError),
    #[error(transparent)]
    Sched(#[from] SchedError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("bad configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    DamagedEdcs,
    DamagedEdcsBatch,
    Worstcase32,
    UniformSparsify,
    UniformSparsifyBatch,
}

impl Algo {
    pub const ALL: [Algo; 5] =
        [Algo::DamagedEdcs, Algo::DamagedEdcsBatch, Algo::Worstcase32, Algo::UniformSparsify, Algo::UniformSparsifyBatch];

    pub fn is_uniform(self) -> bool {
        matches!(self, Algo::UniformSparsify | Algo::UniformSparsifyBatch)
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Algo::ALL.into_iter().find(|a| a.to_string() == s).ok_or_else(|| format!("unknown algorithm '{s}'"))
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::DamagedEdcs => "damaged-edcs",
            Algo::DamagedEdcsBatch => "damaged-edcs-batch",
            Algo::Worstcase32 => "worstcase-3-2",
            Algo::UniformSparsify => "uniform-sparsify",
            Algo::UniformSparsifyBatch => "uniform-sparsify-batch",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub algo: Algo,
    /// EDCS degree bound, or the weight cap for the uniform sparsifier.
    pub beta: f64,
    /// EDCS slack, or the uniform edge weight.
    pub lambda: f64,
    pub delta: f64,
    pub eps: f64,
    /// Batch count; `None` picks the smallest `k` with `k^k` covering the stream.
    pub k: Option<usize>,
    /// Parts per guessed matching size in the vertex reduction.
    pub c: f64,
    /// Partitionings per level; `Some` turns the vertex reduction on for
    /// `worstcase-3-2`.
    pub l: Option<usize>,
    /// Guess growth factor of the reduction; `None` is `1 + eps/(8 alpha)`.
    pub growth: Option<f64>,
    pub seed: u64,
    /// Verify every this many steps; 0 never.
    pub verify_every: usize,
    pub strict: bool,
}

impl RunConfig {
    /// Defaults per algorithm family.
    pub fn new(algo: Algo) -> Self {
        let (beta, lambda) = if algo.is_uniform() { (1.0, 0.25) } else { (16.0, 0.5) };
        RunConfig {
            algo,
            beta,
            lambda,
            delta: 0.5,
            eps: 0.5,
            k: None,
            c: 4.0,
            l: None,
            growth: None,
            seed: 0,
            verify_every: 0,
            strict: false,
        }
    }

    pub fn edcs_params(&self) -> Result<EdcsParams, EdcsError> {
        let mut p = EdcsParams::new(self.beta, self.lambda, self.delta);
        if self.strict {
            p = p.with_strict(StrictMode::new(self.eps));
        }
        p.validate()?;
        Ok(p)
    }

    pub fn uniform_params(&self) -> UniformParams {
        UniformParams::new(self.lambda, self.beta, self.eps)
    }

    fn batch_count(&self, len: usize) -> usize {
        self.k.unwrap_or_else(|| k_for_length(len.max(1)))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepOutcome {
    pub rebuilt: bool,
    /// Work spent in the final matcher; the rest of a step is the
    /// sparsifier layer.
    pub matcher_work: u64,
}

pub trait Pipeline {
    fn step(&mut self, ev: &UpdateEvent) -> Result<StepOutcome, HarnessError>;
    fn graph(&self) -> &DynamicGraph;
    fn matching(&self) -> &Matching;
    /// First violated invariant, if any.
    fn check(&self) -> Result<(), String>;
}

/// Number of rebuilds an instance has done, for the rebuild flag.
pub trait RebuildCount {
    fn rebuild_count(&self) -> usize;
}

impl RebuildCount for BatchEdcsMatcher {
    fn rebuild_count(&self) -> usize {
        self.edcs().rebuilds()
    }
}

impl RebuildCount for BatchUniformMatcher {
    fn rebuild_count(&self) -> usize {
        let s = self.sparsifier().stats();
        s.full_rebuilds + s.partial_rebuilds.iter().sum::<usize>()
    }
}

fn edcs_check(g: &DynamicGraph, edcs: &DamagedEdcs) -> Result<(), String> {
    let w = edcs.witness();
    let rep = check_damaged_edcs(g, edcs.sparsifier(), edcs.params().bounds(), Some(&w), false).map_err(|e| e.to_string())?;
    match rep.violations.first() {
        Some(v) => Err(format!("damaged EDCS: {v}")),
        None => Ok(()),
    }
}

fn matching_check(g: &DynamicGraph, m: &Matching, what: &str) -> Result<(), String> {
    if check_matching(g, m) {
        Ok(())
    } else {
        Err(format!("{what} is not a matching of the graph"))
    }
}

fn apply_measured(m: &mut MatcherState, host: &DynamicGraph, changes: &[UpdateEvent]) -> (bool, u64) {
    let (rebuilt, w) = work::measure(|| changes.iter().fold(false, |acc, ch| m.apply(host, ch) | acc));
    (rebuilt, w)
}

/// Position of step `t` among `k` equal batches of a `len`-step stream.
fn batch_of(t: usize, k: usize, len: usize) -> usize {
    1 + t * k / len.max(1)
}

/// Damaged EDCS with the approximate matcher on its sparsifier, amortized
/// or in batch mode.
pub struct EdcsPipeline {
    g: DynamicGraph,
    edcs: DamagedEdcs,
    m: MatcherState,
    batch: Option<(usize, usize)>,
    t: usize,
}

impl EdcsPipeline {
    /// `batch = Some((k, len))` feeds the stream as `k` equal batches.
    pub fn new(n: usize, params: EdcsParams, eps: f64, batch: Option<(usize, usize)>) -> Result<Self, HarnessError> {
        let g = DynamicGraph::new(n);
        let (params, k) = match batch {
            Some((k, _)) => (params.degenerate_ok(), k),
            None => (params, 1),
        };
        let edcs = DamagedEdcs::init(&g, params, k)?;
        let m = MatcherState::new(edcs.sparsifier(), eps, params.beta.floor() as usize);
        Ok(EdcsPipeline { g, edcs, m, batch, t: 0 })
    }

    pub fn edcs(&self) -> &DamagedEdcs {
        &self.edcs
    }
}

impl Pipeline for EdcsPipeline {
    fn step(&mut self, ev: &UpdateEvent) -> Result<StepOutcome, HarnessError> {
        self.g.apply(ev)?;
        if let Some((k, len)) = self.batch {
            let i = batch_of(self.t, k, len).min(k);
            if self.edcs.batch_index() != Some(i) {
                self.edcs.set_batch(i)?;
            }
        }
        self.t += 1;
        let before = self.edcs.rebuilds();
        self.edcs.apply(&self.g, ev);
        let changes = self.edcs.take_h_changes();
        let (_, mw) = apply_measured(&mut self.m, self.edcs.sparsifier(), &changes);
        Ok(StepOutcome { rebuilt: self.edcs.rebuilds() > before, matcher_work: mw })
    }

    fn graph(&self) -> &DynamicGraph {
        &self.g
    }

    fn matching(&self) -> &Matching {
        self.m.matching()
    }

    fn check(&self) -> Result<(), String> {
        edcs_check(&self.g, &self.edcs)?;
        matching_check(self.edcs.sparsifier(), self.m.matching(), "matching")
    }
}

/// Maximal subgraph of the input with degrees at most `floor(1/lambda)`:
/// the support of a lambda-uniform fractional matching.
#[derive(Clone, Debug)]
pub struct UniformSupport {
    g: DynamicGraph,
    s: DynamicGraph,
    cap: usize,
}

impl UniformSupport {
    pub fn new(n: usize, lambda: f64) -> Self {
        UniformSupport { g: DynamicGraph::new(n), s: DynamicGraph::new(n), cap: weight_cap(lambda) }
    }

    pub fn graph(&self) -> &DynamicGraph {
        &self.g
    }

    pub fn support(&self) -> &DynamicGraph {
        &self.s
    }

    /// Apply `ev` to the input and return the resulting support changes.
    pub fn apply(&mut self, ev: &UpdateEvent) -> Result<Vec<UpdateEvent>, GraphError> {
        self.g.apply(ev)?;
        let e = ev.edge;
        let mut out = Vec::new();
        match ev.kind {
            UpdateKind::Insert => {
                if self.s.degree(e.u) < self.cap && self.s.degree(e.v) < self.cap {
                    self.s.insert(e)?;
                    out.push(*ev);
                }
            }
            UpdateKind::Delete => {
                if self.s.has_edge(e) {
                    self.s.delete(e)?;
                    out.push(*ev);
                    for x in [e.u, e.v] {
                        if self.s.degree(x) >= self.cap {
                            continue;
                        }
                        let pick = self.g.neighbors(x).filter(|&y| self.s.degree(y) < self.cap && !self.s.has_edge(Edge::of(x, y))).min();
                        if let Some(y) = pick {
                            let f = Edge::of(x, y);
                            self.s.insert(f)?;
                            out.push(UpdateEvent::insert(f));
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn check(&self) -> Result<(), String> {
        if let Some(e) = self.s.edges().find(|&e| !self.g.has_edge(e)) {
            return Err(format!("support edge {e} not in graph"));
        }
        if self.s.max_degree() > self.cap {
            return Err("support degree above 1/lambda".into());
        }
        if let Some(e) = self.g.edges().find(|&e| !self.s.has_edge(e) && self.s.degree(e.u) < self.cap && self.s.degree(e.v) < self.cap) {
            return Err(format!("support not maximal at {e}"));
        }
        Ok(())
    }
}

/// Uniform sparsifier on the support, matcher on its output.
pub struct UniformPipeline {
    support: UniformSupport,
    us: UniformSparsifier,
    m: MatcherState,
    batch: Option<(usize, usize)>,
    t: usize,
}

impl UniformPipeline {
    pub fn new(n: usize, params: UniformParams, batch: Option<(usize, usize)>) -> Result<Self, HarnessError> {
        let k = batch.map_or(1, |b| b.0);
        let us = UniformSparsifier::new(&DynamicGraph::new(n), params, k)?;
        let m = MatcherState::new(us.output(), params.eps, 0);
        Ok(UniformPipeline { support: UniformSupport::new(n, params.lambda), us, m, batch, t: 0 })
    }

    pub fn sparsifier(&self) -> &UniformSparsifier {
        &self.us
    }
}

impl Pipeline for UniformPipeline {
    fn step(&mut self, ev: &UpdateEvent) -> Result<StepOutcome, HarnessError> {
        let changes = self.support.apply(ev)?;
        if let Some((k, len)) = self.batch {
            let i = batch_of(self.t, k, len).min(k);
            if self.us.batch_index() != Some(i) {
                self.us.set_batch(i)?;
            }
        }
        self.t += 1;
        let before = self.us.stats().clone();
        for ch in &changes {
            self.us.apply(ch)?;
        }
        let out = self.us.take_output_changes();
        let (_, mw) = apply_measured(&mut self.m, self.us.output(), &out);
        Ok(StepOutcome { rebuilt: *self.us.stats() != before, matcher_work: mw })
    }

    fn graph(&self) -> &DynamicGraph {
        self.support.graph()
    }

    fn matching(&self) -> &Matching {
        self.m.matching()
    }

    fn check(&self) -> Result<(), String> {
        self.support.check()?;
        let rep = self.us.report();
        if !rep.exact_ok() {
            return Err(format!("uniform sparsifier invariants: {rep:?}"));
        }
        matching_check(self.us.output(), self.m.matching(), "matching")
    }
}

/// `k` scheduled instances, the union of their outputs, and the matcher on
/// the union.
pub struct SchedUnion<A: BatchAlgorithm + RebuildCount> {
    sched: BatchScheduler<A>,
    m: MatcherState,
    rebuilds: usize,
}

impl<A: BatchAlgorithm + RebuildCount> SchedUnion<A> {
    pub fn new(k: usize, g: &DynamicGraph, factory: impl FnMut(usize) -> A, eps: f64) -> Result<Self, SchedError> {
        let mut sched = BatchScheduler::new(k, g, factory)?;
        sched.take_union_changes();
        let m = MatcherState::new(sched.union(), eps, k);
        let mut s = SchedUnion { sched, m, rebuilds: 0 };
        s.rebuilds = s.total_rebuilds();
        Ok(s)
    }

    pub fn scheduler(&self) -> &BatchScheduler<A> {
        &self.sched
    }

    pub fn matching(&self) -> &Matching {
        self.m.matching()
    }

    fn total_rebuilds(&self) -> usize {
        (0..self.sched.k()).map(|i| self.sched.instance(i).rebuild_count()).sum()
    }

    pub fn step(&mut self, ev: &UpdateEvent) -> Result<StepOutcome, SchedError> {
        self.sched.step(*ev)?;
        let changes = self.sched.take_union_changes();
        let (_, mw) = apply_measured(&mut self.m, self.sched.union(), &changes);
        let total = self.total_rebuilds();
        let rebuilt = total != self.rebuilds;
        self.rebuilds = total;
        Ok(StepOutcome { rebuilt, matcher_work: mw })
    }
}

impl<A: BatchAlgorithm + RebuildCount> CellMatcher for SchedUnion<A> {
    fn update(&mut self, _g: &DynamicGraph, ev: &UpdateEvent) {
        self.step(ev).expect("cell stream fits the scheduler");
    }

    fn matching(&self) -> &Matching {
        self.m.matching()
    }
}

/// Scheduled damaged EDCS: the worst-case (3/2 + eps, delta) pipeline.
pub struct WorstCasePipeline {
    inner: SchedUnion<BatchEdcsMatcher>,
}

impl WorstCasePipeline {
    pub fn new(n: usize, params: EdcsParams, eps: f64, k: usize) -> Result<Self, HarnessError> {
        let g = DynamicGraph::new(n);
        BatchEdcsMatcher::new(&g, params, k)?;
        let inner = SchedUnion::new(k, &g, |_| BatchEdcsMatcher::new(&g, params, k).expect("checked above"), eps)?;
        Ok(WorstCasePipeline { inner })
    }

    pub fn scheduler(&self) -> &BatchScheduler<BatchEdcsMatcher> {
        self.inner.scheduler()
    }
}

impl Pipeline for WorstCasePipeline {
    fn step(&mut self, ev: &UpdateEvent) -> Result<StepOutcome, HarnessError> {
        Ok(self.inner.step(ev)?)
    }

    fn graph(&self) -> &DynamicGraph {
        self.inner.sched.graph()
    }

    fn matching(&self) -> &Matching {
        self.inner.matching()
    }

    fn check(&self) -> Result<(), String> {
        let s = &self.inner.sched;
        for &i in s.fresh() {
            let inst = s.instance(i);
            if !inst.graph().same_edges(s.graph()) {
                return Err(format!("fresh instance {i} is behind the input"));
            }
            edcs_check(s.graph(), inst.edcs()).map_err(|e| format!("instance {i}: {e}"))?;
        }
        matching_check(s.union(), self.inner.matching(), "matching")
    }
}

/// Scheduled uniform sparsifier on the support.
pub struct SchedUniformPipeline {
    support: UniformSupport,
    inner: SchedUnion<BatchUniformMatcher>,
}

impl SchedUniformPipeline {
    pub fn new(n: usize, params: UniformParams, k: usize) -> Result<Self, HarnessError> {
        let g = DynamicGraph::new(n);
        BatchUniformMatcher::new(&g, params, k)?;
        let inner = SchedUnion::new(k, &g, |_| BatchUniformMatcher::new(&g, params, k).expect("checked above"), params.eps)?;
        Ok(SchedUniformPipeline { support: UniformSupport::new(n, params.lambda), inner })
    }
}

impl Pipeline for SchedUniformPipeline {
    fn step(&mut self, ev: &UpdateEvent) -> Result<StepOutcome, HarnessError> {
        let mut out = StepOutcome::default();
        for ch in self.support.apply(ev)? {
            let o = self.inner.step(&ch)?;
            out.rebuilt |= o.rebuilt;
            out.matcher_work += o.matcher_work;
        }
        Ok(out)
    }

    fn graph(&self) -> &DynamicGraph {
        self.support.graph()
    }

    fn matching(&self) -> &Matching {
        self.inner.matching()
    }

    fn check(&self) -> Result<(), String> {
        self.support.check()?;
        let s = &self.inner.sched;
        for &i in s.fresh() {
            let rep = s.instance(i).sparsifier().report();
            if !rep.exact_ok() {
                return Err(format!("instance {i} uniform invariants: {rep:?}"));
            }
        }
        matching_check(s.union(), self.inner.matching(), "matching")
    }
}

/// Worst-case pipeline inside the vertex reduction: every cell is a
/// scheduled damaged EDCS on a concatenated graph.
pub struct ReducedPipeline {
    vs: VertexSparsifier<SchedUnion<BatchEdcsMatcher>>,
}

impl ReducedPipeline {
    pub fn new(n: usize, params: EdcsParams, cfg: ReductionConfig, size: usize, k: usize, seed: u64) -> Result<Self, HarnessError> {
        let inner = EdcsParams { delta: cfg.inner_delta(), ..params }.degenerate_ok();
        inner.validate()?;
        let g = DynamicGraph::new(n);
        let vs = VertexSparsifier::new(&g, cfg, random_source(n, size, seed), |cg, _| {
            SchedUnion::new(k, cg, |_| BatchEdcsMatcher::new(cg, inner, k).expect("validated"), cfg.outer_eps())
                .expect("k >= 2")
        });
        Ok(ReducedPipeline { vs })
    }
}

impl Pipeline for ReducedPipeline {
    fn step(&mut self, ev: &UpdateEvent) -> Result<StepOutcome, HarnessError> {
        self.vs.update(ev)?;
        Ok(StepOutcome::default())
    }

    fn graph(&self) -> &DynamicGraph {
        self.vs.graph()
    }

    fn matching(&self) -> &Matching {
        self.vs.matching()
    }

    fn check(&self) -> Result<(), String> {
        for c in 0..self.vs.cell_count() {
            matching_check(self.vs.graph(), &self.vs.pulled_back(c), &format!("pull-back of cell {c}"))?;
        }
        matching_check(self.vs.graph(), self.vs.matching(), "matching")
    }
}

/// Build the configured pipeline for a stream of `len` updates on `n`
/// vertices. `scheduled` swaps an amortized pipeline for its scheduled
/// counterpart.
pub fn build(cfg: &RunConfig, n: usize, len: usize, scheduled: bool) -> Result<Box<dyn Pipeline>, HarnessError> {
    if cfg.eps <= 0.0 {
        return Err(HarnessError::Config(format!("eps must be positive, got {}", cfg.eps)));
    }
    if cfg.k == Some(0) || cfg.k == Some(1) && (scheduled || cfg.algo == Algo::Worstcase32) {
        return Err(HarnessError::Config("k must be at least 2 for scheduled runs".into()));
    }
    Ok(match (cfg.algo, scheduled) {
        (Algo::DamagedEdcs | Algo::DamagedEdcsBatch | Algo::Worstcase32, true) | (Algo::Worstcase32, false) => {
            let p = cfg.edcs_params()?;
            let k = cfg.batch_count(len);
            match cfg.l {
                Some(size) if !scheduled => {
                    let rc = ReductionConfig { level_growth: cfg.growth, ..ReductionConfig::new(cfg.eps, 1.5 + cfg.eps, cfg.c) };
                    Box::new(ReducedPipeline::new(n, p, rc, size, k, cfg.seed)?)
                }
                _ => Box::new(WorstCasePipeline::new(n, p, cfg.eps, k)?),
            }
        }
        (Algo::DamagedEdcs, false) => Box::new(EdcsPipeline::new(n, cfg.edcs_params()?, cfg.eps, None)?),
        (Algo::DamagedEdcsBatch, false) => {
            Box::new(EdcsPipeline::new(n, cfg.edcs_params()?, cfg.eps, Some((cfg.batch_count(len), len)))?)
        }
        (Algo::UniformSparsify, false) => Box::new(UniformPipeline::new(n, cfg.uniform_params(), None)?),
        (Algo::UniformSparsifyBatch, false) => {
            Box::new(UniformPipeline::new(n, cfg.uniform_params(), Some((cfg.batch_count(len), len)))?)
        }
        (Algo::UniformSparsify | Algo::UniformSparsifyBatch, true) => {
            // a support update can cost up to three sparsifier updates
            Box::new(SchedUniformPipeline::new(n, cfg.uniform_params(), cfg.k.unwrap_or_else(|| k_for_length(3 * len.max(1))))?)
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub step: usize,
    pub work_units: u64,
    pub matching_size: usize,
    pub mu_exact: Option<usize>,
    pub ratio: Option<f64>,
    pub rebuild_flag: bool,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step,
            self.work_units,
            self.matching_size,
            self.mu_exact.map(|x| x.to_string()).unwrap_or_default(),
            self.ratio.map(|r| format!("{r:.6}")).unwrap_or_default(),
            u8::from(self.rebuild_flag)
        )
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// `mu / size`, with `0/0 = 1`.
pub fn ratio(mu: usize, size: usize) -> f64 {
    match (mu, size) {
        (0, _) => 1.0,
        (_, 0) => f64::INFINITY,
        _ => mu as f64 / size as f64,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<MetricsRow>,
    /// First violated invariant, with its step.
    pub failure: Option<String>,
    pub max_ratio: Option<f64>,
}

impl RunOutcome {
    pub fn csv(&self) -> String {
        metrics_csv(&self.rows)
    }
}

/// Run `stream` through the configured pipeline, verifying at steps divisible
/// by `verify_every`. Stops at the first violated invariant.
pub fn run(cfg: &RunConfig, n: usize, stream: &[UpdateEvent]) -> Result<RunOutcome, HarnessError> {
    let mut p = build(cfg, n, stream.len(), false)?;
    let mut out = RunOutcome { rows: Vec::with_capacity(stream.len()), failure: None, max_ratio: None };
    for (t, ev) in stream.iter().enumerate() {
        let (res, w) = work::measure(|| p.step(ev));
        let step = res?;
        let mut row = MetricsRow {
            step: t,
            work_units: w,
            matching_size: p.matching().len(),
            mu_exact: None,
            ratio: None,
            rebuild_flag: step.rebuilt,
        };
        let verify = cfg.verify_every > 0 && t % cfg.verify_every == 0;
        if verify {
            let m = mu(p.graph());
            let r = ratio(m, row.matching_size);
            row.mu_exact = Some(m);
            row.ratio = Some(r);
            out.max_ratio = Some(out.max_ratio.map_or(r, |x: f64| x.max(r)));
            let mut verdict = matching_check(p.graph(), p.matching(), "output").and_then(|_| p.check());
            if verdict.is_ok() && cfg.strict && !cfg.algo.is_uniform() {
                let bound = (1.5 + cfg.eps) * row.matching_size as f64 + cfg.delta * n as f64;
                if m as f64 > bound {
                    verdict = Err(format!("approximation: mu {m} > {bound}"));
                }
            }
            if let Err(e) = verdict {
                out.rows.push(row);
                out.failure = Some(format!("step {t}: {e}"));
                return Ok(out);
            }
        }
        out.rows.push(row);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkSummary {
    pub label: String,
    pub steps: usize,
    pub total: u64,
    pub max: u64,
    pub median: u64,
    /// `max / max(median, 1)`.
    pub ratio: f64,
    /// Totals over `k` consecutive equal batches of steps.
    pub batch_totals: Vec<u64>,
}

impl WorkSummary {
    pub fn new(label: &str, work: &[u64], k: usize) -> Self {
        let mut sorted = work.to_vec();
        sorted.sort_unstable();
        let max = sorted.last().copied().unwrap_or(0);
        let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0);
        let k = k.max(1);
        let mut batch_totals = vec![0; k];
        for (t, &w) in work.iter().enumerate() {
            batch_totals[batch_of(t, k, work.len()) - 1] += w;
        }
        WorkSummary {
            label: label.to_string(),
            steps: work.len(),
            total: work.iter().sum(),
            max,
            median,
            ratio: max as f64 / median.max(1) as f64,
            batch_totals,
        }
    }

    pub fn to_text(&self) -> String {
        let totals: Vec<String> = self.batch_totals.iter().map(|x| x.to_string()).collect();
        format!(
            "{}: steps={} total={} max={} median={} max/median={:.3} batches={}",
            self.label,
            self.steps,
            self.total,
            self.max,
            self.median,
            self.ratio,
            totals.join(",")
        )
    }
}

/// Per-step work of the sparsifier layer (the final matcher excluded).
pub fn work_profile(cfg: &RunConfig, n: usize, stream: &[UpdateEvent], scheduled: bool) -> Result<Vec<u64>, HarnessError> {
    let mut p = build(cfg, n, stream.len(), scheduled)?;
    let mut out = Vec::with_capacity(stream.len());
    for ev in stream {
        let (res, w) = work::measure(|| p.step(ev));
        out.push(w - res?.matcher_work);
    }
    Ok(out)
}

/// Amortized and scheduled work profiles of the configured algorithm family.
pub fn bench(cfg: &RunConfig, n: usize, stream: &[UpdateEvent]) -> Result<(WorkSummary, WorkSummary), HarnessError> {
    let base = RunConfig {
        algo: if cfg.algo.is_uniform() { Algo::UniformSparsify } else { Algo::DamagedEdcs },
        l: None,
        ..cfg.clone()
    };
    let k = cfg.batch_count(stream.len());
    let amortized = work_profile(&base, n, stream, false)?;
    let scheduled = work_profile(&base, n, stream, true)?;
    Ok((WorkSummary::new("amortized", &amortized, k), WorkSummary::new("scheduled", &scheduled, k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{gen_stream, StreamKind};

    fn cfg(algo: Algo) -> RunConfig {
        RunConfig { verify_every: 10, ..RunConfig::new(algo) }
    }

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.to_string().parse::<Algo>(), Ok(a));
        }
        assert!("nope".parse::<Algo>().is_err());
    }

    #[test]
    fn empty_stream_is_header_only() {
        let out = run(&cfg(Algo::DamagedEdcs), 64, &[]).unwrap();
        assert_eq!(out.csv(), format!("{CSV_HEADER}\n"));
        assert!(out.failure.is_none());
    }

    #[test]
    fn every_algorithm_verifies() {
        let stream = gen_stream(StreamKind::ErdosRenyiDynamic, 64, 200, 3);
        for a in Algo::ALL {
            let out = run(&cfg(a), 64, &stream).unwrap();
            assert_eq!(out.failure, None, "{a}");
            assert_eq!(out.rows.len(), 200);
            assert!(out.rows.iter().all(|r| r.mu_exact.is_some() == r.ratio.is_some()));
            assert_eq!(out.rows.iter().filter(|r| r.mu_exact.is_some()).count(), 20);
            for r in out.rows.iter().filter(|r| r.mu_exact.is_some()) {
                assert!(r.mu_exact.unwrap() as f64 <= 2.0 * r.matching_size as f64 + 32.0, "{a}: {r:?}");
            }
        }
    }

    #[test]
    fn reduced_pipeline_runs() {
        let stream = gen_stream(StreamKind::ErdosRenyiDynamic, 24, 80, 5);
        let c = RunConfig { l: Some(1), growth: Some(2.0), c: 2.0, ..cfg(Algo::Worstcase32) };
        let out = run(&c, 24, &stream).unwrap();
        assert_eq!(out.failure, None);
    }

    #[test]
    fn uniform_rejects_lambda_at_cap() {
        let c = RunConfig { lambda: 1.0, beta: 1.0, ..cfg(Algo::UniformSparsify) };
        assert!(matches!(run(&c, 10, &[]), Err(HarnessError::Uniform(UniformError::BadWeights(_)))));
    }

    #[test]
    fn runs_are_deterministic() {
        let stream = gen_stream(StreamKind::SlidingWindow, 32, 150, 9);
        for a in Algo::ALL {
            let x = run(&cfg(a), 32, &stream).unwrap().csv();
            let y = run(&cfg(a), 32, &stream).unwrap().csv();
            assert_eq!(x, y, "{a}");
        }
    }

    #[test]
    fn summary_numbers() {
        let s = WorkSummary::new("x", &[1, 5, 2, 100], 2);
        assert_eq!((s.max, s.median, s.total), (100, 5, 108));
        assert_eq!(s.batch_totals, vec![6, 102]);
        assert_eq!(s.ratio, 20.0);
    }
}
