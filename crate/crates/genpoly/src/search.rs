//! Brute-force oracles: exhaustive epimorphism enumeration, isomorphism
//! search, and induced-subgeometry embedding.
//!
//! One backtracking engine drives all three. Source elements are assigned
//! target images along a BFS order of the incidence graph starting from a
//! maximum-degree line; candidate images are kept as bitmasks and narrowed
//! by forward checking. Pruning is restricted to necessary conditions, so
//! enumeration is exhaustive: incidence preservation on assigned flags,
//! distance nonexpansiveness between assigned elements, and per-target
//! support counts for surjectivity.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{Geometry, INF};
use crate::morphisms::Morphism;

/// Hard limit of the candidate bitmask width, per target side.
const MAX_SIDE: usize = 128;

const DIST_UNREACHABLE: u8 = u8::MAX;

#[derive(Clone, Copy, Debug)]
pub struct SearchBudget {
    pub max_nodes: u64,
    pub max_seconds: f64,
    pub parallel_width: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_nodes: u64::MAX,
            max_seconds: f64::INFINITY,
            parallel_width: 1,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionStatus {
    Exhausted,
    NodeBudgetExceeded,
    TimeBudgetExceeded,
}

impl CompletionStatus {
    pub fn exhausted(&self) -> bool {
        matches!(self, CompletionStatus::Exhausted)
    }
}

#[derive(Debug)]
pub struct Enumeration {
    pub morphisms: Vec<Morphism>,
    pub status: CompletionStatus,
    pub nodes: u64,
}

#[derive(Debug)]
pub struct Count {
    pub count: u64,
    pub status: CompletionStatus,
    pub nodes: u64,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("epimorphism search requires connected source and target")]
    Disconnected,
    #[error("target has {count} {side}; the candidate masks support at most {MAX_SIDE}")]
    TargetTooLarge { side: &'static str, count: usize },
    #[error("search budget exceeded before a definitive answer")]
    BudgetExceeded,
}

/// Isomorphism witness up to point-line duality.
#[derive(Debug)]
pub enum DualityWitness {
    Direct(Morphism),
    /// Isomorphism onto the dual of the second geometry.
    Dual(Morphism),
}

// ----------------------------------------------------------------------
// engine
// ----------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
struct Mode {
    injective: bool,
    surjective: bool,
    /// Non-incident source pairs must stay non-incident (induced embedding).
    reflect: bool,
    first_only: bool,
    store: bool,
}

struct Tables {
    src: Arc<Geometry>,
    tgt: Arc<Geometry>,
    order: Vec<usize>,
    /// remaining source points/lines from each depth on (inclusive)
    remaining_pts: Vec<usize>,
    remaining_lns: Vec<usize>,
    src_dist: Vec<Vec<u8>>,
    tgt_pts: usize,
    dcap: usize,
    /// [target vertex][d]: same-side masks of targets at distance <= d
    dist_le_pt: Vec<Vec<u128>>,
    dist_le_ln: Vec<Vec<u128>>,
    /// [target vertex]: full-side masks minus neighbors (for reflection)
    non_nbr_pt: Vec<u128>,
    non_nbr_ln: Vec<u128>,
    init_cand: Vec<u128>,
    mode: Mode,
}

fn full_mask(n: usize) -> u128 {
    if n >= 128 {
        !0
    } else {
        (1u128 << n) - 1
    }
}

fn dist_matrix(g: &Geometry) -> Vec<Vec<u8>> {
    (0..g.vertex_count())
        .map(|v| {
            g.bfs(v)
                .into_iter()
                .map(|d| if d == INF { DIST_UNREACHABLE } else { d.min(254) as u8 })
                .collect()
        })
        .collect()
}

/// BFS assignment order over all components: start each component at its
/// maximum-degree line (maximum-degree vertex if it has no line).
fn assignment_order(g: &Geometry) -> Vec<usize> {
    let nv = g.vertex_count();
    let np = g.point_count();
    let mut seen = vec![false; nv];
    let mut order = Vec::with_capacity(nv);
    while order.len() < nv {
        let start = (np..nv)
            .chain(0..np)
            .filter(|&v| !seen[v])
            .max_by_key(|&v| {
                let deg = g.degree(g.elem(v));
                // prefer lines, then high degree, then low index
                (v >= np, deg, std::cmp::Reverse(v))
            })
            .expect("unseen vertex exists");
        seen[start] = true;
        order.push(start);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            g.for_each_neighbor(u, |w| {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                    queue.push_back(w);
                }
            });
        }
    }
    order
}

/// Sorted multiset of finite distances plus the unreachable count;
/// isomorphisms preserve it.
fn distance_profile(dist: &[u8]) -> Vec<u8> {
    let mut p: Vec<u8> = dist.to_vec();
    p.sort_unstable();
    p
}

impl Tables {
    fn build(
        src: &Arc<Geometry>,
        tgt: &Arc<Geometry>,
        mode: Mode,
    ) -> Result<Tables, SearchError> {
        let tp = tgt.point_count();
        let tl = tgt.line_count();
        if tp > MAX_SIDE {
            return Err(SearchError::TargetTooLarge { side: "points", count: tp });
        }
        if tl > MAX_SIDE {
            return Err(SearchError::TargetTooLarge { side: "lines", count: tl });
        }
        let src_dist = dist_matrix(src);
        let tgt_dist = dist_matrix(tgt);
        let dcap = tgt_dist
            .iter()
            .flatten()
            .filter(|&&d| d != DIST_UNREACHABLE)
            .map(|&d| d as usize)
            .max()
            .unwrap_or(0);

        let ntv = tgt.vertex_count();
        let mut dist_le_pt = vec![vec![0u128; dcap + 1]; ntv];
        let mut dist_le_ln = vec![vec![0u128; dcap + 1]; ntv];
        for tv in 0..ntv {
            for d in 0..=dcap {
                let mut mp = 0u128;
                let mut ml = 0u128;
                for (u, &du) in tgt_dist[tv].iter().enumerate() {
                    if du != DIST_UNREACHABLE && (du as usize) <= d {
                        if u < tp {
                            mp |= 1 << u;
                        } else {
                            ml |= 1 << (u - tp);
                        }
                    }
                }
                dist_le_pt[tv][d] = mp;
                dist_le_ln[tv][d] = ml;
            }
        }
        let mut non_nbr_pt = vec![full_mask(tp); ntv];
        let mut non_nbr_ln = vec![full_mask(tl); ntv];
        for tv in 0..ntv {
            tgt.for_each_neighbor(tv, |u| {
                if u < tp {
                    non_nbr_pt[tv] &= !(1u128 << u);
                } else {
                    non_nbr_ln[tv] &= !(1u128 << (u - tp));
                }
            });
        }

        // initial candidates with static prefilters
        let sp = src.point_count();
        let nsv = src.vertex_count();
        let mut init_cand = vec![0u128; nsv];
        let tgt_profiles: Vec<Vec<u8>> = if mode.injective && !mode.reflect {
            tgt_dist.iter().map(|d| distance_profile(d)).collect()
        } else {
            Vec::new()
        };
        for sv in 0..nsv {
            let is_point = sv < sp;
            let side = if is_point { tp } else { tl };
            let sdeg = src.degree(src.elem(sv));
            let sprofile = if !tgt_profiles.is_empty() {
                distance_profile(&src_dist[sv])
            } else {
                Vec::new()
            };
            let mut mask = 0u128;
            for u in 0..side {
                let tv = if is_point { u } else { tp + u };
                let tdeg = tgt.degree(tgt.elem(tv));
                let ok = if mode.injective && !mode.reflect {
                    // isomorphism: degrees and distance profiles must match
                    sdeg == tdeg && sprofile == tgt_profiles[tv]
                } else if mode.reflect {
                    // induced embedding: the pencil/row injects
                    sdeg <= tdeg
                } else {
                    true
                };
                if ok {
                    mask |= 1 << u;
                }
            }
            init_cand[sv] = mask;
        }

        let order = assignment_order(src);
        let mut remaining_pts = vec![0usize; order.len() + 1];
        let mut remaining_lns = vec![0usize; order.len() + 1];
        for d in (0..order.len()).rev() {
            let is_point = order[d] < sp;
            remaining_pts[d] = remaining_pts[d + 1] + usize::from(is_point);
            remaining_lns[d] = remaining_lns[d + 1] + usize::from(!is_point);
        }

        Ok(Tables {
            src: src.clone(),
            tgt: tgt.clone(),
            order,
            remaining_pts,
            remaining_lns,
            src_dist,
            tgt_pts: tp,
            dcap,
            dist_le_pt,
            dist_le_ln,
            non_nbr_pt,
            non_nbr_ln,
            init_cand,
            mode,
        })
    }

    fn tgt_vertex(&self, src_vertex: usize, side_idx: usize) -> usize {
        if src_vertex < self.src.point_count() {
            side_idx
        } else {
            self.tgt_pts + side_idx
        }
    }
}

/// Shared counters for budget accounting across workers.
struct Shared {
    nodes: AtomicU64,
    abort: AtomicBool,
    status: Mutex<CompletionStatus>,
    started: Instant,
    max_nodes: u64,
    max_seconds: f64,
}

impl Shared {
    fn new(budget: &SearchBudget) -> Shared {
        Shared {
            nodes: AtomicU64::new(0),
            abort: AtomicBool::new(false),
            status: Mutex::new(CompletionStatus::Exhausted),
            started: Instant::now(),
            max_nodes: budget.max_nodes,
            max_seconds: budget.max_seconds,
        }
    }

    fn trip(&self, status: CompletionStatus) {
        let mut s = self.status.lock().unwrap();
        if s.exhausted() {
            *s = status;
        }
        self.abort.store(true, Ordering::Relaxed);
    }

    /// Accumulates finished work without tripping; a search that completes
    /// under budget is exhausted no matter when the counter lands.
    fn flush(&self, local_nodes: u64) {
        self.nodes.fetch_add(local_nodes, Ordering::Relaxed);
    }

    fn check(&self, local_nodes: u64) -> bool {
        let total = self.nodes.fetch_add(local_nodes, Ordering::Relaxed) + local_nodes;
        if total > self.max_nodes {
            self.trip(CompletionStatus::NodeBudgetExceeded);
        } else if self.started.elapsed().as_secs_f64() > self.max_seconds {
            self.trip(CompletionStatus::TimeBudgetExceeded);
        }
        !self.abort.load(Ordering::Relaxed)
    }
}

struct State<'a> {
    t: &'a Tables,
    shared: &'a Shared,
    cand: Vec<u128>,
    assigned: Vec<bool>,
    image: Vec<usize>,
    covered: Vec<u32>,
    potential: Vec<i32>,
    uncovered_pts: usize,
    uncovered_lns: usize,
    trail: Vec<Vec<(usize, u128)>>,
    unflushed: u64,
    stopped: bool,
    found: Vec<(Vec<usize>, Vec<usize>)>,
    count: u64,
}

impl<'a> State<'a> {
    fn new(t: &'a Tables, shared: &'a Shared) -> State<'a> {
        let nsv = t.src.vertex_count();
        let ntv = t.tgt.vertex_count();
        let mut potential = vec![0i32; ntv];
        for (sv, &mask) in t.init_cand.iter().enumerate() {
            let mut bits = mask;
            while bits != 0 {
                let u = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                potential[t.tgt_vertex(sv, u)] += 1;
            }
        }
        State {
            t,
            shared,
            cand: t.init_cand.clone(),
            assigned: vec![false; nsv],
            image: vec![usize::MAX; nsv],
            covered: vec![0; ntv],
            potential,
            uncovered_pts: t.tgt.point_count(),
            uncovered_lns: t.tgt.line_count(),
            trail: (0..=nsv).map(|_| Vec::new()).collect(),
            unflushed: 0,
            stopped: false,
            found: Vec::new(),
            count: 0,
        }
    }

    fn narrow(&mut self, depth: usize, f: usize, mask: u128) -> bool {
        let old = self.cand[f];
        let new = old & mask;
        if new == old {
            return true;
        }
        self.trail[depth].push((f, old));
        self.cand[f] = new;
        let mut lost = old & !new;
        let mut alive = true;
        while lost != 0 {
            let u = lost.trailing_zeros() as usize;
            lost &= lost - 1;
            let tv = self.t.tgt_vertex(f, u);
            self.potential[tv] -= 1;
            if self.t.mode.surjective && self.potential[tv] == 0 && self.covered[tv] == 0 {
                alive = false;
            }
        }
        alive && new != 0
    }

    /// Assigns `sv -> side_idx` at `depth`; returns whether the branch
    /// stays alive. Always leaves a trail for [`State::undo`].
    fn try_assign(&mut self, depth: usize, sv: usize, side_idx: usize) -> bool {
        self.unflushed += 1;
        if self.unflushed >= 1024 {
            if !self.shared.check(self.unflushed) {
                self.stopped = true;
            }
            self.unflushed = 0;
        }
        let t = self.t;
        let tv = t.tgt_vertex(sv, side_idx);
        // bookkeeping below must run even when stopping so that the
        // caller's unconditional undo stays paired with it
        self.trail[depth].clear();
        self.assigned[sv] = true;
        self.image[sv] = side_idx;

        // sv leaves the unassigned pool
        let mut bits = self.cand[sv];
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            self.potential[t.tgt_vertex(sv, u)] -= 1;
        }
        self.covered[tv] += 1;
        let mut alive = !self.stopped;
        if self.covered[tv] == 1 {
            if tv < t.tgt_pts {
                self.uncovered_pts -= 1;
            } else {
                self.uncovered_lns -= 1;
            }
        }
        if t.mode.surjective {
            // every surviving uncovered target still needs support, and
            // there must be enough unassigned sources left per side
            let mut lost = self.cand[sv];
            while lost != 0 {
                let u = lost.trailing_zeros() as usize;
                lost &= lost - 1;
                let v = t.tgt_vertex(sv, u);
                if self.potential[v] == 0 && self.covered[v] == 0 {
                    alive = false;
                }
            }
            if self.uncovered_pts > t.remaining_pts[depth + 1]
                || self.uncovered_lns > t.remaining_lns[depth + 1]
            {
                alive = false;
            }
        }
        if !alive {
            return false;
        }

        let sp = t.src.point_count();
        let nsv = t.src.vertex_count();
        for f in 0..nsv {
            if self.assigned[f] || f == sv {
                continue;
            }
            let d = t.src_dist[sv][f];
            let f_is_point = f < sp;
            let mut mask = if d == DIST_UNREACHABLE {
                full_mask(if f_is_point { t.tgt.point_count() } else { t.tgt.line_count() })
            } else {
                let dd = (d as usize).min(t.dcap);
                if f_is_point {
                    t.dist_le_pt[tv][dd]
                } else {
                    t.dist_le_ln[tv][dd]
                }
            };
            if t.mode.injective && (f_is_point == (sv < sp)) {
                mask &= !(1u128 << side_idx);
            }
            if t.mode.reflect && (f_is_point != (sv < sp)) && d != 1 {
                mask &= if f_is_point { t.non_nbr_pt[tv] } else { t.non_nbr_ln[tv] };
            }
            if !self.narrow(depth, f, mask) {
                return false;
            }
        }
        true
    }

    fn undo(&mut self, depth: usize, sv: usize, side_idx: usize) {
        let t = self.t;
        while let Some((f, old)) = self.trail[depth].pop() {
            let mut gained = old & !self.cand[f];
            while gained != 0 {
                let u = gained.trailing_zeros() as usize;
                gained &= gained - 1;
                self.potential[t.tgt_vertex(f, u)] += 1;
            }
            self.cand[f] = old;
        }
        let tv = t.tgt_vertex(sv, side_idx);
        self.covered[tv] -= 1;
        if self.covered[tv] == 0 {
            if tv < t.tgt_pts {
                self.uncovered_pts += 1;
            } else {
                self.uncovered_lns += 1;
            }
        }
        let mut bits = self.cand[sv];
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            self.potential[t.tgt_vertex(sv, u)] += 1;
        }
        self.assigned[sv] = false;
        self.image[sv] = usize::MAX;
    }

    fn emit(&mut self) {
        self.count += 1;
        if self.t.mode.store {
            let sp = self.t.src.point_count();
            let points = self.image[..sp].to_vec();
            let lines = self.image[sp..].to_vec();
            self.found.push((points, lines));
        }
    }

    fn search(&mut self, depth: usize) {
        if self.stopped {
            return;
        }
        if depth == self.t.order.len() {
            if !self.t.mode.surjective || (self.uncovered_pts == 0 && self.uncovered_lns == 0) {
                self.emit();
            }
            return;
        }
        let sv = self.t.order[depth];
        let mut bits = self.cand[sv];
        while bits != 0 {
            let side_idx = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if self.try_assign(depth, sv, side_idx) {
                self.search(depth + 1);
            }
            self.undo(depth, sv, side_idx);
            if self.stopped || (self.t.mode.first_only && self.count > 0) {
                return;
            }
        }
    }

    /// Replays a prefix produced by the splitter; the prefix was generated
    /// with identical propagation, so it must stay consistent.
    fn replay(&mut self, prefix: &[usize]) -> bool {
        for (depth, &side_idx) in prefix.iter().enumerate() {
            let sv = self.t.order[depth];
            if !self.try_assign(depth, sv, side_idx) {
                return false;
            }
        }
        true
    }
}

/// Expands the top of the search tree into enough independent prefixes to
/// feed the worker pool. Complete assignments encountered on the way are
/// emitted directly into `sink`.
fn split_prefixes(
    t: &Tables,
    shared: &Shared,
    want: usize,
    sink: &mut State<'_>,
) -> Vec<Vec<usize>> {
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    let full_depth = t.order.len();
    loop {
        if frontier.is_empty() || frontier.len() >= want {
            return frontier;
        }
        let depth = frontier[0].len();
        if depth == full_depth {
            return frontier;
        }
        let mut next = Vec::new();
        for prefix in frontier {
            let mut st = State::new(t, shared);
            if !st.replay(&prefix) {
                continue;
            }
            let sv = t.order[depth];
            let mut bits = st.cand[sv];
            while bits != 0 {
                let side_idx = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if st.try_assign(depth, sv, side_idx) {
                    if depth + 1 == full_depth {
                        if !t.mode.surjective
                            || (st.uncovered_pts == 0 && st.uncovered_lns == 0)
                        {
                            // full assignment discovered during splitting
                            let sp = t.src.point_count();
                            sink.count += 1;
                            if t.mode.store {
                                sink.found.push((
                                    st.image[..sp].to_vec(),
                                    st.image[sp..].to_vec(),
                                ));
                            }
                        }
                    } else {
                        let mut longer = prefix.clone();
                        longer.push(side_idx);
                        next.push(longer);
                    }
                }
                st.undo(depth, sv, side_idx);
            }
        }
        frontier = next;
    }
}

struct RunOutcome {
    found: Vec<(Vec<usize>, Vec<usize>)>,
    count: u64,
    status: CompletionStatus,
    nodes: u64,
}

fn run_engine(t: &Tables, budget: &SearchBudget) -> RunOutcome {
    let shared = Shared::new(budget);
    // first-hit searches stay sequential so the witness is deterministic
    let width = if t.mode.first_only { 1 } else { budget.parallel_width };
    let mut found;
    let mut count;
    if width <= 1 {
        let mut st = State::new(t, &shared);
        st.search(0);
        shared.flush(st.unflushed);
        found = st.found;
        count = st.count;
    } else {
        let mut sink = State::new(t, &shared);
        let prefixes = split_prefixes(t, &shared, 4 * width, &mut sink);
        found = sink.found;
        count = sink.count;
        let queue = Mutex::new(VecDeque::from(prefixes));
        let results: Mutex<Vec<(Vec<(Vec<usize>, Vec<usize>)>, u64)>> = Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for _ in 0..width {
                scope.spawn(|| {
                    let mut local_found = Vec::new();
                    let mut local_count = 0u64;
                    loop {
                        let prefix = { queue.lock().unwrap().pop_front() };
                        let Some(prefix) = prefix else { break };
                        // gate before starting new work; pending prefixes
                        // mean a trip here leaves the search incomplete
                        if !shared.check(0) {
                            break;
                        }
                        let mut st = State::new(t, &shared);
                        if st.replay(&prefix) {
                            st.search(prefix.len());
                        }
                        shared.flush(st.unflushed);
                        local_found.append(&mut st.found);
                        local_count += st.count;
                    }
                    results.lock().unwrap().push((local_found, local_count));
                });
            }
        });
        for (mut f, c) in results.into_inner().unwrap() {
            found.append(&mut f);
            count += c;
        }
    }
    found.sort();
    found.dedup();
    let status = *shared.status.lock().unwrap();
    RunOutcome {
        found,
        count,
        status,
        nodes: shared.nodes.load(Ordering::Relaxed),
    }
}

// ----------------------------------------------------------------------
// public operations
// ----------------------------------------------------------------------

fn to_morphisms(
    src: &Arc<Geometry>,
    tgt: &Arc<Geometry>,
    maps: Vec<(Vec<usize>, Vec<usize>)>,
) -> Vec<Morphism> {
    maps.into_iter()
        .map(|(points, lines)| {
            Morphism::new(src.clone(), tgt.clone(), points, lines)
                .expect("engine emits size-correct maps")
        })
        .collect()
}

/// Every incidence-preserving, point- and line-surjective map pair from
/// `src` onto `tgt`, each emitted exactly once, sorted canonically.
pub fn enumerate_epimorphisms(
    src: &Arc<Geometry>,
    tgt: &Arc<Geometry>,
    budget: &SearchBudget,
) -> Result<Enumeration, SearchError> {
    if !src.is_connected() || !tgt.is_connected() {
        return Err(SearchError::Disconnected);
    }
    let mode = Mode {
        injective: false,
        surjective: true,
        reflect: false,
        first_only: false,
        store: true,
    };
    let t = Tables::build(src, tgt, mode)?;
    let out = run_engine(&t, budget);
    Ok(Enumeration {
        morphisms: to_morphisms(src, tgt, out.found),
        status: out.status,
        nodes: out.nodes,
    })
}

/// Counts epimorphisms without materializing them.
pub fn count_epimorphisms(
    src: &Arc<Geometry>,
    tgt: &Arc<Geometry>,
    budget: &SearchBudget,
) -> Result<Count, SearchError> {
    if !src.is_connected() || !tgt.is_connected() {
        return Err(SearchError::Disconnected);
    }
    let mode = Mode {
        injective: false,
        surjective: true,
        reflect: false,
        first_only: false,
        store: false,
    };
    let t = Tables::build(src, tgt, mode)?;
    let out = run_engine(&t, budget);
    Ok(Count { count: out.count, status: out.status, nodes: out.nodes })
}

/// An isomorphism witness, or a definitive `None`. Sizes, flag counts,
/// degree sequences and distance profiles are checked before searching;
/// a bijective incidence-preserving pair with equal flag counts reflects
/// incidence automatically.
pub fn is_isomorphic(
    g: &Arc<Geometry>,
    h: &Arc<Geometry>,
) -> Result<Option<Morphism>, SearchError> {
    if g.point_count() != h.point_count()
        || g.line_count() != h.line_count()
        || g.incidence_count() != h.incidence_count()
    {
        return Ok(None);
    }
    let mode = Mode {
        injective: true,
        surjective: true,
        reflect: false,
        first_only: true,
        store: true,
    };
    let t = Tables::build(g, h, mode)?;
    let out = run_engine(&t, &SearchBudget::default());
    let m = to_morphisms(g, h, out.found).into_iter().next();
    if let Some(ref iso) = m {
        debug_assert!(iso.is_bijective() && iso.verify().passed());
    }
    Ok(m)
}

/// Isomorphism onto `h` or onto its point-line dual.
pub fn iso_up_to_duality(
    g: &Arc<Geometry>,
    h: &Arc<Geometry>,
) -> Result<Option<DualityWitness>, SearchError> {
    if let Some(m) = is_isomorphic(g, h)? {
        return Ok(Some(DualityWitness::Direct(m)));
    }
    let hd = Arc::new(h.dual());
    Ok(is_isomorphic(g, &hd)?.map(DualityWitness::Dual))
}

/// Injective incidence-preserving and incidence-reflecting pair of maps
/// (an induced-substructure embedding), or `None` if the search space is
/// exhausted without one.
pub fn find_subgeometry_embedding(
    small: &Arc<Geometry>,
    big: &Arc<Geometry>,
    budget: &SearchBudget,
) -> Result<Option<Morphism>, SearchError> {
    if small.point_count() > big.point_count() || small.line_count() > big.line_count() {
        return Ok(None);
    }
    let mode = Mode {
        injective: true,
        surjective: false,
        reflect: true,
        first_only: true,
        store: true,
    };
    let t = Tables::build(small, big, mode)?;
    let out = run_engine(&t, budget);
    let first = to_morphisms(small, big, out.found).into_iter().next();
    match first {
        Some(m) => Ok(Some(m)),
        None if out.status.exhausted() => Ok(None),
        None => Err(SearchError::BudgetExceeded),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{
        gen_grid, gen_ordinary, gen_projective_plane, gen_symplectic_quadrangle,
    };
    use crate::morphisms::target_cycle_automorphisms;
    use crate::transforms::{double, undouble};

    fn arc(g: Geometry) -> Arc<Geometry> {
        Arc::new(g)
    }

    #[test]
    fn triangle_self_epimorphisms_are_its_six_automorphisms() {
        let tri = arc(gen_ordinary(3).unwrap());
        let out = enumerate_epimorphisms(&tri, &tri, &SearchBudget::default()).unwrap();
        assert!(out.status.exhausted());
        assert_eq!(out.morphisms.len(), 6);
        let mut expected: Vec<(Vec<usize>, Vec<usize>)> = target_cycle_automorphisms(3)
            .iter()
            .map(|m| (m.point_map().to_vec(), m.line_map().to_vec()))
            .collect();
        expected.sort();
        let got: Vec<(Vec<usize>, Vec<usize>)> = out
            .morphisms
            .iter()
            .map(|m| (m.point_map().to_vec(), m.line_map().to_vec()))
            .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn octagon_self_epimorphism_count_is_pinned() {
        let oct = arc(gen_ordinary(8).unwrap());
        let out = count_epimorphisms(&oct, &oct, &SearchBudget::default()).unwrap();
        assert!(out.status.exhausted());
        assert_eq!(out.count, 16);
    }

    #[test]
    fn fano_to_triangle_count_is_pinned() {
        let fano = arc(gen_projective_plane(2).unwrap());
        let tri = arc(gen_ordinary(3).unwrap());
        let out = enumerate_epimorphisms(&fano, &tri, &SearchBudget::default()).unwrap();
        assert!(out.status.exhausted());
        assert_eq!(out.morphisms.len(), 126);
        for m in &out.morphisms {
            assert!(m.is_epimorphism());
        }
    }

    #[test]
    fn fano_cannot_cover_the_grid() {
        let fano = arc(gen_projective_plane(2).unwrap());
        let grid = arc(gen_grid(2).unwrap());
        let out = count_epimorphisms(&fano, &grid, &SearchBudget::default()).unwrap();
        assert!(out.status.exhausted());
        assert_eq!(out.count, 0);
    }

    #[test]
    fn parallel_width_does_not_change_the_result_set() {
        let fano = arc(gen_projective_plane(2).unwrap());
        let tri = arc(gen_ordinary(3).unwrap());
        let seq = enumerate_epimorphisms(&fano, &tri, &SearchBudget::default()).unwrap();
        let par = enumerate_epimorphisms(
            &fano,
            &tri,
            &SearchBudget { parallel_width: 4, ..Default::default() },
        )
        .unwrap();
        assert_eq!(seq.morphisms.len(), par.morphisms.len());
        for (a, b) in seq.morphisms.iter().zip(par.morphisms.iter()) {
            assert_eq!(a.point_map(), b.point_map());
            assert_eq!(a.line_map(), b.line_map());
        }
    }

    #[test]
    fn node_budget_aborts_with_explicit_status() {
        let w2 = arc(gen_symplectic_quadrangle(2).unwrap());
        let out = count_epimorphisms(
            &w2,
            &w2,
            &SearchBudget { max_nodes: 50, ..Default::default() },
        )
        .unwrap();
        assert_eq!(out.status, CompletionStatus::NodeBudgetExceeded);
    }

    #[test]
    fn fano_is_self_dual() {
        let fano = arc(gen_projective_plane(2).unwrap());
        let dual = arc(fano.dual());
        let iso = is_isomorphic(&fano, &dual).unwrap().expect("self-dual");
        assert!(iso.is_bijective());
        assert!(iso.verify().passed());
    }

    #[test]
    fn different_planes_are_not_isomorphic() {
        let a = arc(gen_projective_plane(2).unwrap());
        let b = arc(gen_projective_plane(3).unwrap());
        assert!(is_isomorphic(&a, &b).unwrap().is_none());
    }

    #[test]
    fn undoubling_a_double_recovers_w2_up_to_duality() {
        let w2 = arc(gen_symplectic_quadrangle(2).unwrap());
        let back = arc(undouble(&double(&w2).unwrap()).unwrap());
        let witness = iso_up_to_duality(&back, &w2).unwrap();
        assert!(witness.is_some());
    }

    #[test]
    fn triangle_embeds_in_the_fano_plane() {
        let tri = arc(gen_ordinary(3).unwrap());
        let fano = arc(gen_projective_plane(2).unwrap());
        let emb = find_subgeometry_embedding(&tri, &fano, &SearchBudget::default())
            .unwrap()
            .expect("planes contain triangles");
        assert!(emb.is_injective());
        assert!(emb.verify().passed());
        // induced: non-incident pairs stay non-incident
        for p in 0..3 {
            for l in 0..3 {
                assert_eq!(
                    tri.incident(p, l),
                    fano.incident(emb.point_map()[p], emb.line_map()[l])
                );
            }
        }
    }

    #[test]
    fn fano_embeds_in_the_order_four_plane() {
        let fano = arc(gen_projective_plane(2).unwrap());
        let big = arc(gen_projective_plane(4).unwrap());
        let emb = find_subgeometry_embedding(&fano, &big, &SearchBudget::default())
            .unwrap()
            .expect("subfield subplane");
        assert!(emb.is_injective());
        for p in 0..7 {
            for l in 0..7 {
                assert_eq!(
                    fano.incident(p, l),
                    big.incident(emb.point_map()[p], emb.line_map()[l])
                );
            }
        }
    }

    #[test]
    fn nonagon_does_not_fit_in_fano() {
        let nine = arc(gen_ordinary(9).unwrap());
        let fano = arc(gen_projective_plane(2).unwrap());
        assert!(find_subgeometry_embedding(&nine, &fano, &SearchBudget::default())
            .unwrap()
            .is_none());
    }
}
