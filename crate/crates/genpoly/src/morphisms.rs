//! Morphisms between geometries: verification, fibers, the recipe builder
//! for epimorphisms onto ordinary m-gons, and the classifier that maps a
//! given epimorphism back to recipe data.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::gen_ordinary;
use crate::geometry::{check_generalized_polygon, Element, Geometry};

#[derive(Debug, Error)]
pub enum MorphismError {
    #[error("point map has {got} entries but the source has {want} points")]
    PointMapSize { got: usize, want: usize },
    #[error("line map has {got} entries but the source has {want} lines")]
    LineMapSize { got: usize, want: usize },
    #[error("point {point} maps to {image}, but the target has {points} points")]
    PointImageRange { point: usize, image: usize, points: usize },
    #[error("line {line} maps to {image}, but the target has {lines} lines")]
    LineImageRange { line: usize, image: usize, lines: usize },
    #[error("cannot compose: inner target does not match outer source")]
    ComposeMismatch,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// A pair of maps (points to points, lines to lines) between two
/// geometries. Construction validates sizes and ranges only; incidence
/// preservation is a separate verdict via [`Morphism::verify`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    source: Arc<Geometry>,
    target: Arc<Geometry>,
    point_map: Vec<usize>,
    line_map: Vec<usize>,
}

/// Witness for an incidence-preservation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MapVerdict {
    Pass,
    /// The first source flag (point-major order) whose image is not a flag.
    Fail { point: usize, line: usize },
}

impl MapVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, MapVerdict::Pass)
    }
}

impl Morphism {
    pub fn new(
        source: Arc<Geometry>,
        target: Arc<Geometry>,
        point_map: Vec<usize>,
        line_map: Vec<usize>,
    ) -> Result<Morphism, MorphismError> {
        if point_map.len() != source.point_count() {
            return Err(MorphismError::PointMapSize {
                got: point_map.len(),
                want: source.point_count(),
            });
        }
        if line_map.len() != source.line_count() {
            return Err(MorphismError::LineMapSize {
                got: line_map.len(),
                want: source.line_count(),
            });
        }
        for (p, &i) in point_map.iter().enumerate() {
            if i >= target.point_count() {
                return Err(MorphismError::PointImageRange {
                    point: p,
                    image: i,
                    points: target.point_count(),
                });
            }
        }
        for (l, &i) in line_map.iter().enumerate() {
            if i >= target.line_count() {
                return Err(MorphismError::LineImageRange {
                    line: l,
                    image: i,
                    lines: target.line_count(),
                });
            }
        }
        Ok(Morphism { source, target, point_map, line_map })
    }

    pub fn identity(g: &Arc<Geometry>) -> Morphism {
        Morphism {
            source: g.clone(),
            target: g.clone(),
            point_map: (0..g.point_count()).collect(),
            line_map: (0..g.line_count()).collect(),
        }
    }

    pub fn source(&self) -> &Arc<Geometry> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Geometry> {
        &self.target
    }

    pub fn point_map(&self) -> &[usize] {
        &self.point_map
    }

    pub fn line_map(&self) -> &[usize] {
        &self.line_map
    }

    pub fn map_element(&self, e: Element) -> Element {
        match e {
            Element::Point(p) => Element::Point(self.point_map[p]),
            Element::Line(l) => Element::Line(self.line_map[l]),
        }
    }

    /// Incidence preservation over every source flag.
    pub fn verify(&self) -> MapVerdict {
        for (p, l) in self.source.flags() {
            if !self.target.incident(self.point_map[p], self.line_map[l]) {
                return MapVerdict::Fail { point: p, line: l };
            }
        }
        MapVerdict::Pass
    }

    /// First target element with empty preimage, if any.
    pub fn first_uncovered(&self) -> Option<Element> {
        let mut pts = vec![false; self.target.point_count()];
        for &i in &self.point_map {
            pts[i] = true;
        }
        if let Some(i) = pts.iter().position(|&c| !c) {
            return Some(Element::Point(i));
        }
        let mut lns = vec![false; self.target.line_count()];
        for &i in &self.line_map {
            lns[i] = true;
        }
        lns.iter().position(|&c| !c).map(Element::Line)
    }

    /// Surjective on points and on lines (flag-surjectivity not required),
    /// and incidence preserving.
    pub fn is_epimorphism(&self) -> bool {
        self.verify().passed() && self.first_uncovered().is_none()
    }

    pub fn is_injective(&self) -> bool {
        let distinct = |map: &[usize]| {
            let mut seen = vec![false; map.len().max(map.iter().map(|&i| i + 1).max().unwrap_or(0))];
            map.iter().all(|&i| !std::mem::replace(&mut seen[i], true))
        };
        distinct(&self.point_map) && distinct(&self.line_map)
    }

    pub fn is_bijective(&self) -> bool {
        self.is_injective()
            && self.source.point_count() == self.target.point_count()
            && self.source.line_count() == self.target.line_count()
    }

    /// Fiber partition of the target under an epimorphism.
    pub fn fibers(&self) -> Fibering {
        let mut point_fibers = vec![Vec::new(); self.target.point_count()];
        for (p, &i) in self.point_map.iter().enumerate() {
            point_fibers[i].push(p);
        }
        let mut line_fibers = vec![Vec::new(); self.target.line_count()];
        for (l, &i) in self.line_map.iter().enumerate() {
            line_fibers[i].push(l);
        }
        Fibering { point_fibers, line_fibers }
    }

    /// outer after inner.
    pub fn compose(outer: &Morphism, inner: &Morphism) -> Result<Morphism, MorphismError> {
        if outer.source != inner.target {
            return Err(MorphismError::ComposeMismatch);
        }
        Morphism::new(
            inner.source.clone(),
            outer.target.clone(),
            inner.point_map.iter().map(|&p| outer.point_map[p]).collect(),
            inner.line_map.iter().map(|&l| outer.line_map[l]).collect(),
        )
    }
}

/// Preimage partition induced by an epimorphism.
#[derive(Clone, Debug)]
pub struct Fibering {
    pub point_fibers: Vec<Vec<usize>>,
    pub line_fibers: Vec<Vec<usize>>,
}

// ----------------------------------------------------------------------
// recipe builder
// ----------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    A,
    B,
}

/// Data that pins one recipe epimorphism onto the ordinary m-gon.
///
/// Orientation A: `base` is a source line and the partition cells split its
/// point row. Orientation B is the dual recipe: `base` is a source point,
/// the cells split its pencil, and the construction runs on the dual
/// geometry before being transported back. `target_labeling[i]` is the
/// target point carrying the i-th cyclic label; consecutive labels must be
/// collinear. The first cell maps to the lower cell label, the second to
/// the higher one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassDescriptor {
    pub orientation: Orientation,
    pub base: usize,
    pub partition: (Vec<usize>, Vec<usize>),
    pub target_labeling: Vec<usize>,
}

impl ClassDescriptor {
    pub fn identity_labeling(
        orientation: Orientation,
        base: usize,
        partition: (Vec<usize>, Vec<usize>),
        m: usize,
    ) -> ClassDescriptor {
        ClassDescriptor {
            orientation,
            base,
            partition,
            target_labeling: (0..m).collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("gonality {0} is not one of 3, 4, 6, 8")]
    UnsupportedGonality(usize),
    #[error("source is not a thick generalized {n}-gon")]
    SourceNotPolygon { n: usize },
    #[error("descriptor base {base} is out of range")]
    BaseOutOfRange { base: usize },
    #[error("both partition cells must be nonempty")]
    EmptyCell,
    #[error("partition cells must split the base row exactly")]
    BadPartition,
    #[error("target labeling is not a cyclic point labeling")]
    BadLabeling,
    #[error("shells overlap at point {point}")]
    OverlappingShells { point: usize },
    #[error("shells leave point {point} uncovered")]
    UncoveredPoint { point: usize },
    #[error("line fibers overlap at line {line}")]
    OverlappingLineFibers { line: usize },
    #[error("line {line} is not incident with both far shells")]
    FarLineDetached { line: usize },
    #[error("recipe output failed epimorphism verification")]
    OutputNotEpimorphism,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Label indices of the two partition cells on the base edge.
/// The shells then grow backward from the first and forward from the
/// second, meeting at the far side of the cycle.
fn cell_labels(m: usize) -> (usize, usize) {
    match m {
        3 | 4 => (0, 1),
        _ => (1, 2),
    }
}

fn chain_steps(m: usize) -> (usize, usize) {
    // (backward, forward); forward takes the extra step when m is odd
    let k = (m - 2) / 2;
    (k, m - 2 - k)
}

/// Builds the recipe epimorphism of the requested orientation from a thick
/// generalized m-gon onto the ordinary m-gon `gen_ordinary(m)`.
pub fn build_recipe_epi(
    g: &Arc<Geometry>,
    m: usize,
    d: &ClassDescriptor,
) -> Result<Morphism, RecipeError> {
    if !matches!(m, 3 | 4 | 6 | 8) {
        return Err(RecipeError::UnsupportedGonality(m));
    }
    if !check_generalized_polygon(g, m).passed() {
        return Err(RecipeError::SourceNotPolygon { n: m });
    }
    match d.orientation {
        Orientation::A => build_class_a(g, m, d),
        Orientation::B => {
            let gd = Arc::new(g.dual());
            let da = ClassDescriptor { orientation: Orientation::A, ..d.clone() };
            let star = build_class_a(&gd, m, &da)?;
            // transport through the canonical duality of the m-gon:
            // a dual point j becomes point j, a dual line i becomes line i-1
            let point_map = star.line_map().to_vec();
            let line_map = star.point_map().iter().map(|&i| (i + m - 1) % m).collect();
            let target = Arc::new(gen_ordinary(m).expect("m validated"));
            let phi = Morphism::new(g.clone(), target, point_map, line_map)
                .map_err(|_| RecipeError::OutputNotEpimorphism)?;
            if !phi.is_epimorphism() {
                return Err(RecipeError::OutputNotEpimorphism);
            }
            Ok(phi)
        }
    }
}

/// Marks every point collinear with a marked point.
fn collinear_mask(g: &Geometry, set: &[bool]) -> Vec<bool> {
    let mut out = vec![false; g.point_count()];
    for q in 0..g.point_count() {
        if !set[q] {
            continue;
        }
        for &l in g.lines_of(q) {
            for &p in g.points_of(l) {
                if p != q {
                    out[p] = true;
                }
            }
        }
    }
    out
}

fn build_class_a(g: &Arc<Geometry>, m: usize, d: &ClassDescriptor) -> Result<Morphism, RecipeError> {
    let np = g.point_count();
    let nl = g.line_count();
    if d.base >= nl {
        return Err(RecipeError::BaseOutOfRange { base: d.base });
    }
    let row = g.points_of(d.base);

    // validate the partition
    let (ref cell1, ref cell2) = d.partition;
    if cell1.is_empty() || cell2.is_empty() {
        return Err(RecipeError::EmptyCell);
    }
    let mut seen = vec![0u8; np];
    for &p in cell1.iter().chain(cell2.iter()) {
        if p >= np {
            return Err(RecipeError::BadPartition);
        }
        seen[p] += 1;
    }
    let covers_row = row.iter().all(|&p| seen[p] == 1)
        && seen.iter().sum::<u8>() as usize == row.len()
        && cell1.len() + cell2.len() == row.len();
    if !covers_row {
        return Err(RecipeError::BadPartition);
    }

    // validate the cyclic labeling
    let target = Arc::new(gen_ordinary(m).expect("m validated"));
    let lab = &d.target_labeling;
    if lab.len() != m {
        return Err(RecipeError::BadLabeling);
    }
    let mut used = vec![false; m];
    for &p in lab {
        if p >= m || std::mem::replace(&mut used[p], true) {
            return Err(RecipeError::BadLabeling);
        }
    }
    let joining = |a: usize, b: usize| -> Result<usize, RecipeError> {
        let common: Vec<usize> = target
            .lines_of(a)
            .iter()
            .filter(|l| target.points_of(**l).contains(&b))
            .copied()
            .collect();
        match common.as_slice() {
            [l] => Ok(*l),
            _ => Err(RecipeError::BadLabeling),
        }
    };
    let edge_lines: Vec<usize> = (0..m)
        .map(|i| joining(lab[i], lab[(i + 1) % m]))
        .collect::<Result<_, _>>()?;
    let edge_between = |i: usize, j: usize| -> usize {
        // labels i and j are cyclically adjacent
        if (i + 1) % m == j {
            edge_lines[i]
        } else {
            debug_assert_eq!((j + 1) % m, i);
            edge_lines[j]
        }
    };

    let (back, fwd) = cell_labels(m);
    let (ksteps, fsteps) = chain_steps(m);

    // point shells, layer by layer from the two cells
    let mask_of = |cell: &[usize]| {
        let mut mask = vec![false; np];
        for &p in cell {
            mask[p] = true;
        }
        mask
    };
    let row_mask = mask_of(row);
    let grow = |start: Vec<bool>, steps: usize| -> Vec<Vec<bool>> {
        let mut shells = vec![start];
        for j in 1..=steps {
            let coll = collinear_mask(g, &shells[j - 1]);
            let shell = (0..np)
                .map(|p| {
                    let excluded = if j == 1 {
                        row_mask[p]
                    } else {
                        shells[j - 2][p] || shells[j - 1][p]
                    };
                    coll[p] && !excluded
                })
                .collect();
            shells.push(shell);
        }
        shells
    };
    let kshells = grow(mask_of(cell1), ksteps);
    let mut fshells = grow(mask_of(cell2), fsteps);
    if m == 3 {
        // plane recipe: the far shell is every point off the base line
        fshells[1] = row_mask.iter().map(|&r| !r).collect();
    }

    // assemble the point map; shells must partition the point set
    let mut point_map: Vec<Option<usize>> = vec![None; np];
    let mut assign_shell = |shell: &[bool], label: usize| -> Result<(), RecipeError> {
        for p in 0..np {
            if shell[p] {
                if point_map[p].is_some() {
                    return Err(RecipeError::OverlappingShells { point: p });
                }
                point_map[p] = Some(lab[label]);
            }
        }
        Ok(())
    };
    for (j, shell) in kshells.iter().enumerate() {
        assign_shell(shell, (back + m - j % m) % m)?;
    }
    for (j, shell) in fshells.iter().enumerate() {
        assign_shell(shell, (fwd + j) % m)?;
    }
    let point_map: Vec<usize> = point_map
        .into_iter()
        .enumerate()
        .map(|(p, v)| v.ok_or(RecipeError::UncoveredPoint { point: p }))
        .collect::<Result<_, _>>()?;

    // line fibers along each chain: the next fiber consists of the lines
    // meeting the previous shell, minus the previous fiber
    let mut line_map: Vec<Option<usize>> = vec![None; nl];
    line_map[d.base] = Some(edge_between(back, fwd));
    let meets = |l: usize, shell: &[bool]| g.points_of(l).iter().any(|&p| shell[p]);
    let assign_chain = |shells: &[Vec<bool>],
                            label_at: &dyn Fn(usize) -> usize,
                            line_map: &mut Vec<Option<usize>>|
     -> Result<(), RecipeError> {
        let mut prev = vec![false; nl];
        prev[d.base] = true;
        for (j, shell) in shells.iter().enumerate().take(shells.len() - 1) {
            let edge = edge_between(label_at(j), label_at(j + 1));
            let mut cur = vec![false; nl];
            for l in 0..nl {
                if prev[l] || !meets(l, shell) {
                    continue;
                }
                match line_map[l] {
                    None => {
                        line_map[l] = Some(edge);
                        cur[l] = true;
                    }
                    Some(e) if e == edge => cur[l] = true,
                    Some(_) => return Err(RecipeError::OverlappingLineFibers { line: l }),
                }
            }
            prev = cur;
        }
        Ok(())
    };
    let back_label = |j: usize| (back + m - j % m) % m;
    let fwd_label = |j: usize| (fwd + j) % m;
    assign_chain(&kshells, &back_label, &mut line_map)?;
    assign_chain(&fshells, &fwd_label, &mut line_map)?;

    // far edge: everything left must touch both far shells
    let far_edge = edge_between(fwd_label(fsteps), back_label(ksteps));
    let far_f = &fshells[fsteps];
    let far_k = &kshells[ksteps];
    for l in 0..nl {
        if line_map[l].is_none() {
            if !(meets(l, far_f) && meets(l, far_k)) {
                return Err(RecipeError::FarLineDetached { line: l });
            }
            line_map[l] = Some(far_edge);
        }
    }
    let line_map: Vec<usize> = line_map.into_iter().map(Option::unwrap).collect();

    let phi = Morphism::new(g.clone(), target, point_map, line_map)
        .map_err(|_| RecipeError::OutputNotEpimorphism)?;
    if !phi.is_epimorphism() {
        return Err(RecipeError::OutputNotEpimorphism);
    }
    Ok(phi)
}

/// All recipe descriptors with the identity labeling: every base element
/// and every ordered nonempty bipartition of its row (orientation A) or
/// pencil (orientation B).
pub fn all_recipe_descriptors(
    g: &Geometry,
    m: usize,
    orientation: Orientation,
) -> Vec<ClassDescriptor> {
    let bases: Vec<(usize, &[usize])> = match orientation {
        Orientation::A => (0..g.line_count()).map(|l| (l, g.points_of(l))).collect(),
        Orientation::B => (0..g.point_count()).map(|p| (p, g.lines_of(p))).collect(),
    };
    let mut out = Vec::new();
    for (base, row) in bases {
        let k = row.len();
        for mask in 1..(1u32 << k) - 1 {
            let mut cell1 = Vec::new();
            let mut cell2 = Vec::new();
            for (i, &e) in row.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    cell1.push(e);
                } else {
                    cell2.push(e);
                }
            }
            out.push(ClassDescriptor::identity_labeling(
                orientation,
                base,
                (cell1, cell2),
                m,
            ));
        }
    }
    out
}

/// The 2m type-preserving automorphisms of the ordinary m-gon: m rotations
/// and m reflections of the point cycle.
pub fn target_cycle_automorphisms(m: usize) -> Vec<Morphism> {
    let target = Arc::new(gen_ordinary(m).expect("ordinary m-gon"));
    let mut out = Vec::with_capacity(2 * m);
    for k in 0..m {
        let point_map = (0..m).map(|i| (i + k) % m).collect();
        let line_map = (0..m).map(|j| (j + k) % m).collect();
        out.push(Morphism::new(target.clone(), target.clone(), point_map, line_map).unwrap());
    }
    for c in 0..m {
        let point_map = (0..m).map(|i| (c + m - i) % m).collect();
        let line_map = (0..m).map(|j| (c + 2 * m - j - 1) % m).collect();
        out.push(Morphism::new(target.clone(), target.clone(), point_map, line_map).unwrap());
    }
    out
}

// ----------------------------------------------------------------------
// classifier
// ----------------------------------------------------------------------

/// Maps a verified epimorphism onto the canonical ordinary m-gon back to a
/// recipe descriptor (identity labeling) and the target automorphism that
/// reproduces it: `pi . build_recipe_epi(d) == phi`.
pub fn classify_epi(phi: &Morphism) -> Result<Option<(ClassDescriptor, Morphism)>, RecipeError> {
    let m = phi.target().point_count();
    let canonical = gen_ordinary(m).map_err(|_| RecipeError::UnsupportedGonality(m))?;
    if **phi.target() != canonical {
        return Err(RecipeError::Precondition(
            "target must be the ordinary m-gon in its cyclic labeling".into(),
        ));
    }
    if !phi.is_epimorphism() {
        return Err(RecipeError::Precondition("map is not an epimorphism".into()));
    }
    if !matches!(m, 3 | 4 | 6 | 8) {
        return Err(RecipeError::UnsupportedGonality(m));
    }
    if !check_generalized_polygon(phi.source(), m).passed() {
        return Err(RecipeError::Precondition(format!(
            "source must be a thick generalized {m}-gon"
        )));
    }

    if let Some(hit) = classify_search(phi, m, Orientation::A, phi)? {
        return Ok(Some(hit));
    }
    // dual transport: a class-b epimorphism of phi is a class-a epimorphism
    // of the dual map  point l -> line_map(l)+1 , line p -> point_map(p)
    let gd = Arc::new(phi.source().dual());
    let target = phi.target().clone();
    let star_pts = phi.line_map().iter().map(|&i| (i + 1) % m).collect();
    let star_lines = phi.point_map().to_vec();
    let star = Morphism::new(gd, target, star_pts, star_lines)
        .expect("dual transport preserves sizes");
    debug_assert!(star.is_epimorphism());
    classify_search(&star, m, Orientation::B, phi)
}

/// Scans candidate bases and cell orders on `work` (the primal morphism for
/// orientation A, its dual transport for B), builds each candidate on the
/// primal source and derives the matching target automorphism.
fn classify_search(
    work: &Morphism,
    m: usize,
    orientation: Orientation,
    phi: &Morphism,
) -> Result<Option<(ClassDescriptor, Morphism)>, RecipeError> {
    let wg = work.source();
    let mut fiber_sizes = vec![0usize; m];
    for &t in work.line_map() {
        fiber_sizes[t] += 1;
    }
    for base in 0..wg.line_count() {
        let image = work.line_map()[base];
        if fiber_sizes[image] != 1 {
            continue;
        }
        let endpoints = work.target().points_of(image);
        let (u, v) = (endpoints[0], endpoints[1]);
        let mut cell_u = Vec::new();
        let mut cell_v = Vec::new();
        let mut clean = true;
        for &p in wg.points_of(base) {
            let i = work.point_map()[p];
            if i == u {
                cell_u.push(p);
            } else if i == v {
                cell_v.push(p);
            } else {
                clean = false;
                break;
            }
        }
        if !clean || cell_u.is_empty() || cell_v.is_empty() {
            continue;
        }
        for cells in [(cell_u.clone(), cell_v.clone()), (cell_v.clone(), cell_u.clone())] {
            let d = ClassDescriptor::identity_labeling(orientation, base, cells, m);
            let candidate = build_recipe_epi(phi.source(), m, &d)?;
            if let Some(pi) = automorphism_matching(&candidate, phi) {
                return Ok(Some((d, pi)));
            }
        }
    }
    Ok(None)
}

/// The target automorphism `pi` with `pi . candidate == phi`, if the two
/// epimorphisms have matching fibers.
fn automorphism_matching(candidate: &Morphism, phi: &Morphism) -> Option<Morphism> {
    let target = candidate.target();
    let m = target.point_count();
    let mut pi_pt = vec![usize::MAX; m];
    for (p, &i) in candidate.point_map().iter().enumerate() {
        let want = phi.point_map()[p];
        if pi_pt[i] == usize::MAX {
            pi_pt[i] = want;
        } else if pi_pt[i] != want {
            return None;
        }
    }
    let mut pi_ln = vec![usize::MAX; target.line_count()];
    for (l, &i) in candidate.line_map().iter().enumerate() {
        let want = phi.line_map()[l];
        if pi_ln[i] == usize::MAX {
            pi_ln[i] = want;
        } else if pi_ln[i] != want {
            return None;
        }
    }
    if pi_pt.contains(&usize::MAX) || pi_ln.contains(&usize::MAX) {
        return None;
    }
    let pi = Morphism::new(target.clone(), target.clone(), pi_pt, pi_ln).ok()?;
    (pi.is_bijective() && pi.verify().passed()).then_some(pi)
}

// ----------------------------------------------------------------------
// row and pencil saturation
// ----------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub enum SaturationVerdict {
    Pass,
    /// A source element whose row/pencil image misses `missing`.
    Fail { element: Element, missing: Element },
}

impl SaturationVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, SaturationVerdict::Pass)
    }
}

/// Checks that every source line's point row maps onto the full point row
/// of its image, and dually for pencils. Requires an epimorphism between
/// weak polygons of the same gonality.
pub fn check_row_saturation(phi: &Morphism) -> Result<SaturationVerdict, MorphismError> {
    if !phi.is_epimorphism() {
        return Err(MorphismError::Precondition("map is not an epimorphism".into()));
    }
    let (src, tgt) = (phi.source(), phi.target());
    let n = match (src.gonality(), tgt.gonality()) {
        (Some(a), Some(b)) if a == b => a,
        _ => {
            return Err(MorphismError::Precondition(
                "source and target must share a finite gonality".into(),
            ))
        }
    };
    for (g, role) in [(src, "source"), (tgt, "target")] {
        if !crate::geometry::check_weak_polygon(g, n).passed() {
            return Err(MorphismError::Precondition(format!(
                "{role} is not a weak generalized {n}-gon"
            )));
        }
    }

    for l in 0..src.line_count() {
        let image = phi.line_map()[l];
        let mut covered = vec![false; tgt.point_count()];
        for &p in src.points_of(l) {
            covered[phi.point_map()[p]] = true;
        }
        if let Some(&missing) = tgt.points_of(image).iter().find(|&&q| !covered[q]) {
            return Ok(SaturationVerdict::Fail {
                element: Element::Line(l),
                missing: Element::Point(missing),
            });
        }
    }
    for p in 0..src.point_count() {
        let image = phi.point_map()[p];
        let mut covered = vec![false; tgt.line_count()];
        for &l in src.lines_of(p) {
            covered[phi.line_map()[l]] = true;
        }
        if let Some(&missing) = tgt.lines_of(image).iter().find(|&&k| !covered[k]) {
            return Ok(SaturationVerdict::Fail {
                element: Element::Point(p),
                missing: Element::Line(missing),
            });
        }
    }
    Ok(SaturationVerdict::Pass)
}

// ----------------------------------------------------------------------
// file format
// ----------------------------------------------------------------------

/// Parsed morphism file: geometry references are kept as the raw strings
/// (paths or catalog ids) for the caller to resolve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphismText {
    pub source: String,
    pub target: String,
    pub point_map: Vec<usize>,
    pub line_map: Vec<usize>,
}

/// Parses the morphism file format:
///
/// ```text
/// morphism
/// source <file-or-catalog-id>
/// target <file-or-catalog-id>
/// point <i> -> <j>
/// line <i> -> <j>
/// ```
pub fn parse_morphism(text: &str) -> Result<MorphismText, MorphismError> {
    let err = |line: usize, msg: String| MorphismError::Parse { line, msg };
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if !content.is_empty() {
            rows.push((i + 1, content));
        }
    }
    let mut it = rows.into_iter();
    match it.next() {
        Some((_, "morphism")) => {}
        Some((ln, other)) => return Err(err(ln, format!("expected `morphism`, found `{other}`"))),
        None => return Err(err(1, "empty morphism file".into())),
    }
    let mut source = None;
    let mut target = None;
    let mut points: Vec<(usize, usize)> = Vec::new();
    let mut lines: Vec<(usize, usize)> = Vec::new();
    for (ln, row) in it {
        if let Some(rest) = row.strip_prefix("source ") {
            source = Some(rest.trim().to_string());
        } else if let Some(rest) = row.strip_prefix("target ") {
            target = Some(rest.trim().to_string());
        } else if let Some(rest) = row.strip_prefix("point ") {
            points.push(parse_arrow(rest).ok_or_else(|| err(ln, format!("bad entry `{row}`")))?);
        } else if let Some(rest) = row.strip_prefix("line ") {
            lines.push(parse_arrow(rest).ok_or_else(|| err(ln, format!("bad entry `{row}`")))?);
        } else {
            return Err(err(ln, format!("unrecognized row `{row}`")));
        }
    }
    let source = source.ok_or_else(|| err(1, "missing `source` row".into()))?;
    let target = target.ok_or_else(|| err(1, "missing `target` row".into()))?;
    let dense = |mut entries: Vec<(usize, usize)>, what: &str| -> Result<Vec<usize>, MorphismError> {
        entries.sort_unstable();
        for (expect, &(i, _)) in entries.iter().enumerate() {
            if i != expect {
                return Err(err(1, format!("{what} entries must cover 0..n exactly; missing {expect}")));
            }
        }
        Ok(entries.into_iter().map(|(_, j)| j).collect())
    };
    Ok(MorphismText {
        source,
        target,
        point_map: dense(points, "point")?,
        line_map: dense(lines, "line")?,
    })
}

fn parse_arrow(rest: &str) -> Option<(usize, usize)> {
    let (a, b) = rest.split_once("->")?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Serializes a morphism with the given source/target references.
pub fn morphism_to_text(m: &Morphism, source_ref: &str, target_ref: &str) -> String {
    let mut out = String::from("morphism\n");
    out.push_str(&format!("source {source_ref}\n"));
    out.push_str(&format!("target {target_ref}\n"));
    for (i, j) in m.point_map().iter().enumerate() {
        out.push_str(&format!("point {i} -> {j}\n"));
    }
    for (i, j) in m.line_map().iter().enumerate() {
        out.push_str(&format!("line {i} -> {j}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{gen_grid, gen_projective_plane, gen_symplectic_quadrangle};
    use crate::geometry::Order;

    fn fano() -> Arc<Geometry> {
        Arc::new(gen_projective_plane(2).unwrap())
    }

    fn w2() -> Arc<Geometry> {
        Arc::new(gen_symplectic_quadrangle(2).unwrap())
    }

    fn first_descriptor(g: &Arc<Geometry>, m: usize) -> ClassDescriptor {
        let row = g.points_of(0);
        ClassDescriptor::identity_labeling(
            Orientation::A,
            0,
            (vec![row[0]], row[1..].to_vec()),
            m,
        )
    }

    #[test]
    fn identity_is_an_epimorphism() {
        let g = fano();
        let id = Morphism::identity(&g);
        assert!(id.verify().passed());
        assert!(id.is_epimorphism());
        assert!(id.is_bijective());
        let f = id.fibers();
        assert!(f.point_fibers.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn constant_map_onto_a_flag_is_a_morphism() {
        let hexagon = Arc::new(crate::catalog::gen_ordinary(6).unwrap());
        let phi = Morphism::new(
            hexagon.clone(),
            hexagon.clone(),
            vec![0; 6],
            vec![0; 6],
        )
        .unwrap();
        assert!(phi.verify().passed());
        assert!(!phi.is_epimorphism());
        assert_eq!(phi.first_uncovered(), Some(Element::Point(1)));
    }

    #[test]
    fn verification_reports_the_first_bad_flag() {
        let g = fano();
        let tri = Arc::new(gen_ordinary(3).unwrap());
        // send everything to point 0 / line 0, except one point of line 0
        let row = g.points_of(0).to_vec();
        let mut pmap = vec![0usize; 7];
        pmap[row[1]] = 2; // point 2 is not on line 0 of the triangle? point 2 lies on lines 1,2
        let phi = Morphism::new(g.clone(), tri, pmap, vec![0; 7]).unwrap();
        match phi.verify() {
            MapVerdict::Fail { point, line } => {
                assert_eq!(point, row[1]);
                assert!(g.incident(point, line));
            }
            MapVerdict::Pass => panic!("expected failure"),
        }
    }

    #[test]
    fn size_validation() {
        let g = fano();
        let tri = Arc::new(gen_ordinary(3).unwrap());
        assert!(matches!(
            Morphism::new(g.clone(), tri.clone(), vec![0; 6], vec![0; 7]),
            Err(MorphismError::PointMapSize { .. })
        ));
        assert!(matches!(
            Morphism::new(g.clone(), tri, vec![9; 7], vec![0; 7]),
            Err(MorphismError::PointImageRange { .. })
        ));
    }

    #[test]
    fn recipe_on_fano_matches_the_plane_theorem_shape() {
        let g = fano();
        let d = first_descriptor(&g, 3);
        let phi = build_recipe_epi(&g, 3, &d).unwrap();
        assert!(phi.is_epimorphism());
        let fib = phi.fibers();
        // partition cells become the fibers of the two base labels
        assert_eq!(fib.point_fibers[0], d.partition.0);
        assert_eq!(fib.point_fibers[1], d.partition.1);
        // the base line is alone in its fiber
        let base_edge = phi.line_map()[0];
        assert_eq!(fib.line_fibers[base_edge], vec![0]);
        // off-line points all map to the far label
        assert_eq!(fib.point_fibers[2].len(), 4);
    }

    #[test]
    fn plane_shells_match_the_generic_propagation() {
        // the m=3 recipe pins the far shell to "all points off the line";
        // the layered rule must produce the same set on a real plane
        for q in [2usize, 3] {
            let g = Arc::new(gen_projective_plane(q).unwrap());
            let row = g.points_of(0);
            let cell2 = row[1..].to_vec();
            let mut cell2_mask = vec![false; g.point_count()];
            for &p in &cell2 {
                cell2_mask[p] = true;
            }
            let coll = collinear_mask(&g, &cell2_mask);
            let generic: Vec<usize> = (0..g.point_count())
                .filter(|&p| coll[p] && !row.contains(&p))
                .collect();
            let literal: Vec<usize> =
                (0..g.point_count()).filter(|&p| !row.contains(&p)).collect();
            assert_eq!(generic, literal, "q={q}");
        }
    }

    #[test]
    fn recipe_on_w2_has_the_expected_fiber_sizes() {
        let g = w2();
        let row = g.points_of(0);
        let d = ClassDescriptor::identity_labeling(
            Orientation::A,
            0,
            (vec![row[0]], row[1..].to_vec()),
            4,
        );
        let phi = build_recipe_epi(&g, 4, &d).unwrap();
        let fib = phi.fibers();
        let sizes: Vec<usize> = (0..4).map(|i| fib.point_fibers[i].len()).collect();
        // shells (A,B,C,D) for |A|=1, |B|=2 on a 3-point row of W(2)
        assert_eq!(sizes, vec![1, 2, 8, 4]);
        // the base line is alone in its fiber
        let fib_of_base = phi.line_map()[0];
        assert_eq!(fib.line_fibers[fib_of_base], vec![0]);
    }

    #[test]
    fn recipe_rejects_empty_cells_and_bad_partitions() {
        let g = w2();
        let row = g.points_of(0).to_vec();
        let empty = ClassDescriptor::identity_labeling(
            Orientation::A,
            0,
            (vec![], row.clone()),
            4,
        );
        assert!(matches!(
            build_recipe_epi(&g, 4, &empty),
            Err(RecipeError::EmptyCell)
        ));
        let off_row = ClassDescriptor::identity_labeling(
            Orientation::A,
            0,
            (vec![14], row[1..].to_vec()),
            4,
        );
        assert!(matches!(
            build_recipe_epi(&g, 4, &off_row),
            Err(RecipeError::BadPartition)
        ));
    }

    #[test]
    fn recipe_rejects_thin_sources() {
        let grid = Arc::new(gen_grid(2).unwrap());
        let d = first_descriptor(&grid, 4);
        assert!(matches!(
            build_recipe_epi(&grid, 4, &d),
            Err(RecipeError::SourceNotPolygon { n: 4 })
        ));
    }

    #[test]
    fn orientation_b_builds_a_valid_epimorphism() {
        let g = fano();
        let pencil = g.lines_of(0);
        let d = ClassDescriptor::identity_labeling(
            Orientation::B,
            0,
            (vec![pencil[0]], pencil[1..].to_vec()),
            3,
        );
        let phi = build_recipe_epi(&g, 3, &d).unwrap();
        assert!(phi.is_epimorphism());
        // dual recipe: some line fiber is the singleton base pencil cell
        let fib = phi.fibers();
        assert!(fib.point_fibers.iter().any(|f| f == &vec![0]));
    }

    #[test]
    fn classify_round_trips_every_fano_descriptor() {
        let g = fano();
        for orientation in [Orientation::A, Orientation::B] {
            for d in all_recipe_descriptors(&g, 3, orientation) {
                let phi = build_recipe_epi(&g, 3, &d).unwrap();
                let (d2, pi) = classify_epi(&phi)
                    .unwrap()
                    .unwrap_or_else(|| panic!("no descriptor for {d:?}"));
                let rebuilt = build_recipe_epi(&g, 3, &d2).unwrap();
                let composed = Morphism::compose(&pi, &rebuilt).unwrap();
                assert_eq!(composed, phi);
            }
        }
    }

    #[test]
    fn classify_round_trips_composed_descriptors_on_w2() {
        let g = w2();
        let autos = target_cycle_automorphisms(4);
        // a handful of descriptors composed with every target automorphism
        for d in all_recipe_descriptors(&g, 4, Orientation::A).into_iter().step_by(17) {
            let phi = build_recipe_epi(&g, 4, &d).unwrap();
            for pi in &autos {
                let composed = Morphism::compose(pi, &phi).unwrap();
                let (d2, pi2) = classify_epi(&composed).unwrap().expect("classifiable");
                let rebuilt = build_recipe_epi(&g, 4, &d2).unwrap();
                assert_eq!(Morphism::compose(&pi2, &rebuilt).unwrap(), composed);
            }
        }
    }

    #[test]
    fn classify_rejects_thin_sources() {
        let oct = Arc::new(crate::catalog::gen_ordinary(8).unwrap());
        let id = Morphism::identity(&oct);
        assert!(matches!(
            classify_epi(&id),
            Err(RecipeError::Precondition(_))
        ));
    }

    #[test]
    fn cycle_automorphisms_are_sound() {
        for m in [3usize, 4, 8] {
            let autos = target_cycle_automorphisms(m);
            assert_eq!(autos.len(), 2 * m);
            let mut seen = std::collections::HashSet::new();
            for pi in &autos {
                assert!(pi.verify().passed());
                assert!(pi.is_bijective());
                assert!(seen.insert((pi.point_map().to_vec(), pi.line_map().to_vec())));
            }
        }
    }

    #[test]
    fn row_saturation_on_recipe_outputs() {
        let g = fano();
        let d = first_descriptor(&g, 3);
        let phi = build_recipe_epi(&g, 3, &d).unwrap();
        assert!(check_row_saturation(&phi).unwrap().passed());

        let sub = Morphism::new(
            g.clone(),
            g.clone(),
            vec![0; 7],
            vec![0; 7],
        )
        .unwrap();
        assert!(check_row_saturation(&sub).is_err());
    }

    #[test]
    fn distance_nonexpansiveness_of_recipe_outputs() {
        let g = w2();
        let d = first_descriptor(&g, 4);
        let phi = build_recipe_epi(&g, 4, &d).unwrap();
        for a in g.elements() {
            for b in g.elements() {
                let ds = g.incidence_distance(a, b).unwrap().unwrap();
                let dt = phi
                    .target()
                    .incidence_distance(phi.map_element(a), phi.map_element(b))
                    .unwrap()
                    .unwrap();
                assert!(dt <= ds, "{a},{b}: {dt} > {ds}");
            }
        }
    }

    #[test]
    fn shell_partition_across_catalog_thick_polygons() {
        for (g, m) in [
            (Arc::new(gen_projective_plane(3).unwrap()), 3),
            (Arc::new(gen_projective_plane(4).unwrap()), 3),
            (w2(), 4),
            (Arc::new(gen_symplectic_quadrangle(3).unwrap()), 4),
        ] {
            for d in all_recipe_descriptors(&g, m, Orientation::A).into_iter().step_by(7) {
                let phi = build_recipe_epi(&g, m, &d).unwrap();
                assert!(phi.is_epimorphism(), "{d:?}");
            }
        }
    }

    #[test]
    fn morphism_file_round_trip() {
        let g = fano();
        let d = first_descriptor(&g, 3);
        let phi = build_recipe_epi(&g, 3, &d).unwrap();
        let text = morphism_to_text(&phi, "plane:2", "ordinary:3");
        let parsed = parse_morphism(&text).unwrap();
        assert_eq!(parsed.source, "plane:2");
        assert_eq!(parsed.target, "ordinary:3");
        assert_eq!(parsed.point_map, phi.point_map());
        assert_eq!(parsed.line_map, phi.line_map());
    }

    #[test]
    fn morphism_parse_errors() {
        assert!(parse_morphism("").is_err());
        assert!(parse_morphism("morphism\nsource a\ntarget b\npoint 1 -> 0\n").is_err());
        assert!(parse_morphism("morphism\nsource a\npoint 0 -> 0\n").is_err());
    }

    #[test]
    fn w2_order_sanity() {
        assert_eq!(w2().order_of(), Some(Order { s: 2, t: 2 }));
    }
}
