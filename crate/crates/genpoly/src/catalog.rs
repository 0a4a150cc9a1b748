//! Deterministic generators for the small geometries used throughout the
//! test and acceptance suites.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::Geometry;
use crate::transforms;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unsupported parameter for {family}: {detail}")]
    Unsupported { family: &'static str, detail: String },
    #[error("unknown catalog id `{0}` (expected plane:q, gq:q, ordinary:m, grid:s or thin:m:s)")]
    UnknownId(String),
}

fn unsupported(family: &'static str, detail: impl Into<String>) -> CatalogError {
    CatalogError::Unsupported { family, detail: detail.into() }
}

/// Identifier of a catalog geometry, parsed from strings such as
/// `plane:2`, `gq:3`, `ordinary:8`, `grid:2` or `thin:8:2`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CatalogId {
    Plane { q: usize },
    Quadrangle { q: usize },
    Ordinary { m: usize },
    Grid { s: usize },
    Thin { m: usize, s: usize },
}

impl CatalogId {
    pub fn generate(&self) -> Result<Geometry, CatalogError> {
        let g = match *self {
            CatalogId::Plane { q } => gen_projective_plane(q)?,
            CatalogId::Quadrangle { q } => gen_symplectic_quadrangle(q)?,
            CatalogId::Ordinary { m } => gen_ordinary(m)?,
            CatalogId::Grid { s } => gen_grid(s)?,
            CatalogId::Thin { m, s } => gen_thin(m, s)?,
        };
        Ok(g.with_name(self.to_string()))
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CatalogId::Plane { q } => write!(f, "plane:{q}"),
            CatalogId::Quadrangle { q } => write!(f, "gq:{q}"),
            CatalogId::Ordinary { m } => write!(f, "ordinary:{m}"),
            CatalogId::Grid { s } => write!(f, "grid:{s}"),
            CatalogId::Thin { m, s } => write!(f, "thin:{m}:{s}"),
        }
    }
}

impl FromStr for CatalogId {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CatalogError::UnknownId(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["plane", q] => Ok(CatalogId::Plane { q: num(q)? }),
            ["gq", q] => Ok(CatalogId::Quadrangle { q: num(q)? }),
            ["ordinary", m] => Ok(CatalogId::Ordinary { m: num(m)? }),
            ["grid", s] => Ok(CatalogId::Grid { s: num(s)? }),
            ["thin", m, s] => Ok(CatalogId::Thin { m: num(m)?, s: num(s)? }),
            _ => Err(bad()),
        }
    }
}

/// Every generator instance exercised by the invariant suites.
pub fn standard_catalog() -> Vec<CatalogId> {
    let mut ids = vec![];
    for q in [2, 3, 4] {
        ids.push(CatalogId::Plane { q });
    }
    for q in [2, 3] {
        ids.push(CatalogId::Quadrangle { q });
    }
    for m in [2, 3, 4, 5, 6, 8] {
        ids.push(CatalogId::Ordinary { m });
    }
    for s in [1, 2, 3] {
        ids.push(CatalogId::Grid { s });
    }
    for s in [1, 2, 3, 4] {
        ids.push(CatalogId::Thin { m: 6, s });
    }
    for s in [1, 2, 3] {
        ids.push(CatalogId::Thin { m: 8, s });
    }
    ids
}

// ----------------------------------------------------------------------
// small finite fields (explicit tables; 4 = GF(4) with 2 = w, 3 = w + 1)
// ----------------------------------------------------------------------

struct Field {
    q: usize,
    add: [[u8; 4]; 4],
    mul: [[u8; 4]; 4],
    inv: [u8; 4],
}

impl Field {
    fn new(q: usize) -> Field {
        let mut add = [[0u8; 4]; 4];
        let mut mul = [[0u8; 4]; 4];
        let mut inv = [0u8; 4];
        match q {
            2 | 4 => {
                // characteristic two: addition is xor
                for a in 0..q {
                    for b in 0..q {
                        add[a][b] = (a ^ b) as u8;
                    }
                }
                if q == 2 {
                    mul[1][1] = 1;
                    inv[1] = 1;
                } else {
                    // multiplication modulo w^2 = w + 1
                    const M: [[u8; 4]; 4] = [
                        [0, 0, 0, 0],
                        [0, 1, 2, 3],
                        [0, 2, 3, 1],
                        [0, 3, 1, 2],
                    ];
                    mul = M;
                    inv = [0, 1, 3, 2];
                }
            }
            3 => {
                for a in 0..3 {
                    for b in 0..3 {
                        add[a][b] = ((a + b) % 3) as u8;
                        mul[a][b] = ((a * b) % 3) as u8;
                    }
                }
                inv = [0, 1, 2, 0];
            }
            _ => unreachable!("fields are only built for q in {{2,3,4}}"),
        }
        Field { q, add, mul, inv }
    }

    fn add(&self, a: u8, b: u8) -> u8 {
        self.add[a as usize][b as usize]
    }

    fn sub(&self, a: u8, b: u8) -> u8 {
        // negate, then add; characteristic two is self-inverse
        let neg = if self.q == 3 { (3 - b as usize) % 3 } else { b as usize };
        self.add(a, neg as u8)
    }

    fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize][b as usize]
    }

    fn inv(&self, a: u8) -> u8 {
        self.inv[a as usize]
    }

    /// Scales a vector so that its first nonzero coordinate is one.
    fn normalize(&self, v: &mut [u8]) {
        let lead = match v.iter().find(|&&x| x != 0) {
            Some(&x) => x,
            None => return,
        };
        let s = self.inv(lead);
        for x in v.iter_mut() {
            *x = self.mul(*x, s);
        }
    }

    /// All normalized nonzero vectors of the given dimension, ascending.
    fn projective_points(&self, dim: usize) -> Vec<Vec<u8>> {
        let mut set = BTreeSet::new();
        let total = self.q.pow(dim as u32);
        for code in 1..total {
            let mut v = Vec::with_capacity(dim);
            let mut c = code;
            for _ in 0..dim {
                v.push((c % self.q) as u8);
                c /= self.q;
            }
            v.reverse();
            self.normalize(&mut v);
            set.insert(v);
        }
        set.into_iter().collect()
    }
}

// ----------------------------------------------------------------------
// generators
// ----------------------------------------------------------------------

/// The projective plane PG(2,q): points and lines are the normalized
/// 1- and 2-dimensional subspaces of a 3-dimensional vector space, both
/// indexed lexicographically by homogeneous coordinates.
pub fn gen_projective_plane(q: usize) -> Result<Geometry, CatalogError> {
    if !matches!(q, 2 | 3 | 4) {
        return Err(unsupported("plane", format!("q = {q}, supported: 2, 3, 4")));
    }
    let f = Field::new(q);
    let points = f.projective_points(3);
    let rows = points
        .iter()
        .map(|coeff| {
            (0..points.len())
                .filter(|&i| {
                    let p = &points[i];
                    let dot = f.add(
                        f.add(f.mul(coeff[0], p[0]), f.mul(coeff[1], p[1])),
                        f.mul(coeff[2], p[2]),
                    );
                    dot == 0
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(Geometry::from_line_rows(points.len(), rows)
        .expect("projective incidence is duplicate free"))
}

/// The symplectic quadrangle W(q): all points of 3-dimensional projective
/// space, with the totally isotropic lines of the alternating form
/// x0*y1 - x1*y0 + x2*y3 - x3*y2. Lines are indexed lexicographically by
/// their sorted point tuples.
pub fn gen_symplectic_quadrangle(q: usize) -> Result<Geometry, CatalogError> {
    if !matches!(q, 2 | 3) {
        return Err(unsupported("gq", format!("q = {q}, supported: 2, 3")));
    }
    let f = Field::new(q);
    let points = f.projective_points(4);
    let index: std::collections::BTreeMap<&Vec<u8>, usize> =
        points.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let form = |u: &[u8], v: &[u8]| {
        let a = f.sub(f.mul(u[0], v[1]), f.mul(u[1], v[0]));
        let b = f.sub(f.mul(u[2], v[3]), f.mul(u[3], v[2]));
        f.add(a, b)
    };
    let mut lines = BTreeSet::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if form(&points[i], &points[j]) != 0 {
                continue;
            }
            // the q+1 points of the projective line through i and j
            let mut row = vec![j];
            for lambda in 0..f.q as u8 {
                let mut v: Vec<u8> = (0..4)
                    .map(|k| f.add(points[i][k], f.mul(lambda, points[j][k])))
                    .collect();
                f.normalize(&mut v);
                row.push(index[&v]);
            }
            row.sort_unstable();
            row.dedup();
            debug_assert_eq!(row.len(), f.q + 1);
            lines.insert(row);
        }
    }
    Ok(Geometry::from_line_rows(points.len(), lines.into_iter().collect())
        .expect("isotropic lines are duplicate free"))
}

/// The ordinary m-gon: m points and m lines in a single 2m-circuit.
pub fn gen_ordinary(m: usize) -> Result<Geometry, CatalogError> {
    if m < 2 {
        return Err(unsupported("ordinary", format!("m = {m}, need m >= 2")));
    }
    let rows = (0..m)
        .map(|j| {
            let mut r = vec![j, (j + 1) % m];
            r.sort_unstable();
            r
        })
        .collect();
    Ok(Geometry::from_line_rows(m, rows).expect("cycle incidence is duplicate free"))
}

/// The (s+1) x (s+1) grid: points in row-major order, lines are the rows
/// followed by the columns; a weak quadrangle of order (s,1).
pub fn gen_grid(s: usize) -> Result<Geometry, CatalogError> {
    if s < 1 {
        return Err(unsupported("grid", format!("s = {s}, need s >= 1")));
    }
    let n = s + 1;
    let mut rows = Vec::with_capacity(2 * n);
    for r in 0..n {
        rows.push((0..n).map(|c| r * n + c).collect::<Vec<_>>());
    }
    for c in 0..n {
        rows.push((0..n).map(|r| r * n + c).collect::<Vec<_>>());
    }
    Ok(Geometry::from_line_rows(n * n, rows).expect("grid incidence is duplicate free"))
}

/// The thin m-gon of order (s,1): the point-line dual of the double of the
/// order-(s,s) half-gonality polygon (a plane for m = 6, W(s) for m = 8).
/// For s = 1 this is the ordinary m-gon.
pub fn gen_thin(m: usize, s: usize) -> Result<Geometry, CatalogError> {
    let bad = |detail: String| unsupported("thin", detail);
    match (m, s) {
        (6 | 8, 1) => gen_ordinary(m),
        (6, 2..=4) => {
            let base = gen_projective_plane(s)?;
            let doubled = transforms::double(&base)
                .expect("catalog planes are weak polygons of symmetric order");
            Ok(doubled.dual())
        }
        (8, 2..=3) => {
            let base = gen_symplectic_quadrangle(s)?;
            let doubled = transforms::double(&base)
                .expect("catalog quadrangles are weak polygons of symmetric order");
            Ok(doubled.dual())
        }
        _ => Err(bad(format!(
            "(m, s) = ({m}, {s}); supported: m = 6 with s <= 4, m = 8 with s <= 3"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        check_generalized_polygon, check_weak_polygon, check_weak_polygon_by_paths, Order,
    };

    #[test]
    fn plane_counts_and_axioms() {
        let cases = [(2usize, 7usize), (3, 13), (4, 21)];
        for (q, n) in cases {
            let g = gen_projective_plane(q).unwrap();
            assert_eq!(g.point_count(), n, "q={q}");
            assert_eq!(g.line_count(), n, "q={q}");
            assert_eq!(g.order_of(), Some(Order { s: q, t: q }));
            assert!(check_generalized_polygon(&g, 3).passed(), "q={q}");
        }
        assert!(gen_projective_plane(5).is_err());
    }

    #[test]
    fn symplectic_quadrangle_counts_and_axioms() {
        let g2 = gen_symplectic_quadrangle(2).unwrap();
        assert_eq!(g2.point_count(), 15);
        assert_eq!(g2.line_count(), 15);
        assert_eq!(g2.order_of(), Some(Order { s: 2, t: 2 }));
        assert_eq!(g2.girth(), Some(8));
        assert_eq!(g2.diameter(), Some(4));
        assert!(check_generalized_polygon(&g2, 4).passed());

        let g3 = gen_symplectic_quadrangle(3).unwrap();
        assert_eq!(g3.point_count(), 40);
        assert_eq!(g3.line_count(), 40);
        assert_eq!(g3.order_of(), Some(Order { s: 3, t: 3 }));
        assert!(check_generalized_polygon(&g3, 4).passed());

        assert!(gen_symplectic_quadrangle(4).is_err());
    }

    #[test]
    fn ordinary_polygons() {
        let tri = gen_ordinary(3).unwrap();
        assert_eq!(tri.order_of(), Some(Order { s: 1, t: 1 }));
        assert!(check_weak_polygon(&tri, 3).passed());

        let oct = gen_ordinary(8).unwrap();
        assert!(check_weak_polygon(&oct, 8).passed());
        // the cyclic labeling: point i lies on lines i-1 and i
        for i in 0..8 {
            assert!(oct.incident(i, i));
            assert!(oct.incident((i + 1) % 8, i));
        }

        let digon = gen_ordinary(2).unwrap();
        assert_eq!(digon.point_count(), 2);
        assert_eq!(digon.line_count(), 2);
        assert!(check_weak_polygon(&digon, 2).passed());

        assert!(gen_ordinary(1).is_err());
    }

    #[test]
    fn grids() {
        let unit = gen_grid(1).unwrap();
        assert_eq!(unit.point_count(), 4);
        assert_eq!(unit.line_count(), 4);
        assert!(check_weak_polygon(&unit, 4).passed());

        let g = gen_grid(2).unwrap();
        assert_eq!(g.point_count(), 9);
        assert_eq!(g.line_count(), 6);
        assert_eq!(g.order_of(), Some(Order { s: 2, t: 1 }));
        assert!(check_weak_polygon(&g, 4).passed());
        assert!(!g.is_thick());
        assert!(gen_grid(0).is_err());
    }

    #[test]
    fn thin_polygons() {
        assert_eq!(gen_thin(8, 1).unwrap(), gen_ordinary(8).unwrap());

        let t82 = gen_thin(8, 2).unwrap();
        assert_eq!(t82.point_count(), 45);
        assert_eq!(t82.line_count(), 30);
        assert_eq!(t82.order_of(), Some(Order { s: 2, t: 1 }));
        assert!(check_weak_polygon(&t82, 8).passed());

        let t62 = gen_thin(6, 2).unwrap();
        assert_eq!(t62.point_count(), 21);
        assert_eq!(t62.line_count(), 14);
        assert_eq!(t62.order_of(), Some(Order { s: 2, t: 1 }));
        assert!(check_weak_polygon(&t62, 6).passed());

        assert!(gen_thin(4, 2).is_err());
        assert!(gen_thin(8, 4).is_err());
    }

    #[test]
    fn both_weak_polygon_routes_agree_on_the_whole_catalog() {
        for id in standard_catalog() {
            let g = id.generate().unwrap();
            let n = g.gonality().expect("catalog geometries have circuits");
            for k in [n, n + 1] {
                if k < 2 {
                    continue;
                }
                let fast = check_weak_polygon(&g, k).passed();
                let paths = check_weak_polygon_by_paths(&g, k).passed();
                assert_eq!(fast, paths, "{id} at n = {k}");
            }
        }
    }

    #[test]
    fn generalized_check_agrees_with_thickness_on_the_catalog() {
        for id in standard_catalog() {
            let g = id.generate().unwrap();
            let n = g.gonality().unwrap();
            if n < 3 {
                continue;
            }
            let generalized = check_generalized_polygon(&g, n).passed();
            let weak_and_thick = check_weak_polygon(&g, n).passed() && g.is_thick();
            assert_eq!(generalized, weak_and_thick, "{id}");
        }
    }

    #[test]
    fn catalog_orders_swap_under_duality() {
        for id in standard_catalog() {
            let g = id.generate().unwrap();
            if let Some(o) = g.order_of() {
                assert_eq!(g.dual().order_of(), Some(o.swapped()), "{id}");
            }
        }
    }

    #[test]
    fn catalog_girths_are_even() {
        for id in standard_catalog() {
            let g = id.generate().unwrap();
            let girth = g.girth().expect("catalog geometries have circuits");
            assert_eq!(girth % 2, 0, "{id}");
        }
    }

    #[test]
    fn doubles_in_the_catalog_are_thin() {
        // thin:m:s is the dual of a double, so it has order (s,1)
        for (m, smax) in [(6usize, 4usize), (8, 3)] {
            for s in 1..=smax {
                let g = gen_thin(m, s).unwrap();
                let o = g.order_of().unwrap();
                assert_eq!(o.t, 1, "thin:{m}:{s}");
                assert_eq!(o.s, s, "thin:{m}:{s}");
                assert!(!g.is_thick());
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        for id in standard_catalog() {
            let a = id.generate().unwrap().to_text();
            let b = id.generate().unwrap().to_text();
            assert_eq!(a, b, "{id}");
        }
    }

    #[test]
    fn plane_two_serializes_to_the_pinned_text() {
        let got = gen_projective_plane(2).unwrap().to_text();
        let want = "\
points 7
lines 7
line 0: 1 3 5
line 1: 0 3 4
line 2: 2 3 6
line 3: 0 1 2
line 4: 1 4 6
line 5: 0 5 6
line 6: 2 4 5
";
        assert_eq!(got, want);
    }

    #[test]
    fn catalog_ids_round_trip() {
        for id in standard_catalog() {
            let s = id.to_string();
            assert_eq!(s.parse::<CatalogId>().unwrap(), id);
        }
        assert!("nope:3".parse::<CatalogId>().is_err());
        assert!("plane".parse::<CatalogId>().is_err());
    }
}
