//! Rank test for surjectivity of the differential, on three hand-picked
//! situations: a strictly positive iterate (always surjective), a zero
//! symmetric component (rank deficient), and a doubly degenerate spectrum.
//!
//! Run with: cargo run --example surjectivity_check

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sniep::diagnostics::surjectivity_test;
use sniep::kernels::{OrthMatrix, SymMatrix};
use sniep::manifold::ProductPoint;
use sniep::problem::SpectrumProblem;

fn show(label: &str, p: &SpectrumProblem, x: &ProductPoint) {
    let r = surjectivity_test(p, x, 1e-10).unwrap();
    let needed = p.dim() * (p.dim() + 1) / 2;
    println!(
        "{label:<34} rank(J_S) = {:>2}, rank(J_Q) = {:>2}, joint {:>2}/{needed} -> {}",
        r.j_s_rank,
        r.j_q_rank,
        r.joint_rank,
        if r.full_column_rank { "surjective" } else { "rank deficient" }
    );
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    let distinct = SpectrumProblem::new(vec![5.0, 1.0, -2.0, -3.0]).unwrap();
    let generic = ProductPoint::random(4, &mut rng);
    show("positive S, distinct spectrum:", &distinct, &generic);

    let zero_s = ProductPoint::new(SymMatrix::zeros(4), generic.q().clone());
    show("zero S, distinct spectrum:", &distinct, &zero_s);

    let degenerate = SpectrumProblem::new(vec![5.0, 5.0, -2.0, -2.0]).unwrap();
    show("positive S, double eigenvalues:", &degenerate, &generic);
    let r = surjectivity_test(&degenerate, &generic, 1e-10).unwrap();
    println!("  multiplicities {:?}: rank(J_Q) = 16 - {} = {}", r.multiplicities, 8, r.j_q_rank);

    let identity = ProductPoint::new(SymMatrix::identity(4), OrthMatrix::identity(4));
    show("diagonal S = I, double eigenvalues:", &degenerate, &identity);
}
