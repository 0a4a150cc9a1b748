use std::sync::Arc;
use std::time::Instant;
use genpoly::catalog::*;
use genpoly::search::*;

fn main() {
    let w2 = Arc::new(gen_symplectic_quadrangle(2).unwrap());
    let quad = Arc::new(gen_ordinary(4).unwrap());
    let grid = Arc::new(gen_grid(2).unwrap());
    let budget = SearchBudget::default();

    let t0 = Instant::now();
    let out = enumerate_epimorphisms(&w2, &quad, &budget).unwrap();
    println!("w2->quad: {} results, {:?}, {} nodes, {:.2}s",
        out.morphisms.len(), out.status, out.nodes, t0.elapsed().as_secs_f64());

    let t0 = Instant::now();
    let out = count_epimorphisms(&w2, &grid, &budget).unwrap();
    println!("w2->grid2: {} results, {:?}, {} nodes, {:.2}s",
        out.count, out.status, out.nodes, t0.elapsed().as_secs_f64());

    let t0 = Instant::now();
    let out = count_epimorphisms(&w2, &w2, &budget).unwrap();
    println!("w2->w2: {} results, {:?}, {} nodes, {:.2}s",
        out.count, out.status, out.nodes, t0.elapsed().as_secs_f64());

    let fano = Arc::new(gen_projective_plane(2).unwrap());
    let t0 = Instant::now();
    let out = enumerate_epimorphisms(&fano, &fano, &budget).unwrap();
    println!("fano->fano: {} results, {:?}, {} nodes, {:.2}s",
        out.morphisms.len(), out.status, out.nodes, t0.elapsed().as_secs_f64());
}
