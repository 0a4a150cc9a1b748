//! The doubling construction, its inverse, and the line-parity split of a
//! thin octagon into a generalized quadrangle.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::geometry::{check_weak_polygon, Geometry, Order};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("input has no circuits, so no gonality")]
    NoGonality,
    #[error("input is not a weak generalized {n}-gon")]
    NotWeakPolygon { n: usize },
    #[error("input must have symmetric order (s,s); found {found:?}")]
    NotSymmetricOrder { found: Option<Order> },
    #[error("input must be a thin 2n-gon of order (1,s); found gonality {gonality}, order {found:?}")]
    NotThinDouble { gonality: usize, found: Option<Order> },
    #[error("input must be a thin octagon of order (s,1); found order {found:?}")]
    NotThinOctagon { found: Option<Order> },
    #[error("parity classes are not well defined on this input")]
    ParitySplit,
}

/// The double: points are the elements of `g`, lines are its flags.
/// Requires a weak generalized n-gon of order (s,s); the result is a weak
/// 2n-gon of order (1,s).
pub fn double(g: &Geometry) -> Result<Geometry, TransformError> {
    let n = g.gonality().ok_or(TransformError::NoGonality)?;
    if !check_weak_polygon(g, n).passed() {
        return Err(TransformError::NotWeakPolygon { n });
    }
    match g.order_of() {
        Some(o) if o.s == o.t => {}
        found => return Err(TransformError::NotSymmetricOrder { found }),
    }
    let np = g.point_count();
    let rows = g
        .flags()
        .map(|(p, l)| vec![p, np + l])
        .collect::<Vec<_>>();
    Ok(Geometry::from_line_rows(np + g.line_count(), rows)
        .expect("flags of a validated geometry form a valid line list"))
}

/// Inverse of [`double`]: splits the points of a thin 2n-gon of order (1,s)
/// into the two even-distance classes of the collinearity graph and returns
/// the induced n-gon of order (s,s). The class containing point 0 becomes
/// the point set; the other choice would give the dual.
pub fn undouble(g: &Geometry) -> Result<Geometry, TransformError> {
    let gn = g.gonality().ok_or(TransformError::NoGonality)?;
    if !check_weak_polygon(g, gn).passed() {
        return Err(TransformError::NotWeakPolygon { n: gn });
    }
    let order = g.order_of();
    if gn % 2 != 0 || gn < 4 || order.map(|o| o.s) != Some(1) {
        return Err(TransformError::NotThinDouble { gonality: gn, found: order });
    }

    // Parity of a point = half its incidence distance from point 0.
    let dist = g.bfs(0);
    let parity = |p: usize| (dist[p] / 2) % 2;
    let even: Vec<usize> = (0..g.point_count()).filter(|&p| parity(p) == 0).collect();
    let odd: Vec<usize> = (0..g.point_count()).filter(|&p| parity(p) == 1).collect();
    let pos = |class: &[usize], p: usize| class.binary_search(&p).ok();

    let mut incidences = BTreeSet::new();
    for l in 0..g.line_count() {
        let row = g.points_of(l);
        debug_assert_eq!(row.len(), 2, "order (1,s) means two points per line");
        let (u, v) = (row[0], row[1]);
        let (pt, ln) = match (parity(u), parity(v)) {
            (0, 1) => (pos(&even, u), pos(&odd, v)),
            (1, 0) => (pos(&even, v), pos(&odd, u)),
            _ => return Err(TransformError::ParitySplit),
        };
        match (pt, ln) {
            (Some(p), Some(l)) => {
                incidences.insert((p, l));
            }
            _ => return Err(TransformError::ParitySplit),
        }
    }
    Geometry::new(even.len(), odd.len(), incidences).map_err(|_| TransformError::ParitySplit)
}

/// The two even-distance line classes of a thin octagon together with the
/// generalized quadrangle they induce.
#[derive(Clone, Debug)]
pub struct ParityClasses {
    /// Lines at even line-graph distance from line 0, ascending.
    pub class_a: Vec<usize>,
    /// The complementary class, ascending.
    pub class_b: Vec<usize>,
    /// Quadrangle with point set `class_a`, line set `class_b`, incidence =
    /// line-graph distance one.
    pub derived_quadrangle: Geometry,
    /// For every point of the octagon, its unique pair of incident lines
    /// (class-a line, class-b line), in original line indices.
    pub flag_map: Vec<(usize, usize)>,
}

/// Splits the lines of a thin weak octagon of order (s,1) by line-graph
/// distance parity and builds the derived quadrangle of order (s,s).
pub fn line_parity(g: &Geometry) -> Result<ParityClasses, TransformError> {
    if !check_weak_polygon(g, 8).passed() {
        return Err(TransformError::NotWeakPolygon { n: 8 });
    }
    let order = g.order_of();
    match order {
        Some(o) if o.t == 1 => {}
        found => return Err(TransformError::NotThinOctagon { found }),
    }

    // Line-graph distance between lines is half the incidence distance;
    // classify by parity with a BFS from line 0.
    let np = g.point_count();
    let dist = g.bfs(np);
    let parity = |l: usize| (dist[np + l] / 2) % 2;
    let class_a: Vec<usize> = (0..g.line_count()).filter(|&l| parity(l) == 0).collect();
    let class_b: Vec<usize> = (0..g.line_count()).filter(|&l| parity(l) == 1).collect();

    let mut flag_map = Vec::with_capacity(np);
    let mut incidences = BTreeSet::new();
    for p in 0..np {
        let pencil = g.lines_of(p);
        debug_assert_eq!(pencil.len(), 2, "order (s,1) means two lines per point");
        let (u, v) = (pencil[0], pencil[1]);
        let (a, b) = match (parity(u), parity(v)) {
            (0, 1) => (u, v),
            (1, 0) => (v, u),
            _ => return Err(TransformError::ParitySplit),
        };
        flag_map.push((a, b));
        let pa = class_a.binary_search(&a).map_err(|_| TransformError::ParitySplit)?;
        let pb = class_b.binary_search(&b).map_err(|_| TransformError::ParitySplit)?;
        incidences.insert((pa, pb));
    }
    let derived_quadrangle = Geometry::new(class_a.len(), class_b.len(), incidences)
        .map_err(|_| TransformError::ParitySplit)?;
    Ok(ParityClasses { class_a, class_b, derived_quadrangle, flag_map })
}
