//! Fits a one-hidden-layer regression with the tape and checks its gradients
//! against central differences.
//!
//!     cargo run --example autodiff

use manydg::tensor::{finite_difference_check, Tape, Tensor, Var, DEFAULT_FD_STEP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss<'t>(tape: &'t Tape, p: &[Var<'t>], x: &Tensor, y: &Tensor) -> manydg::Result<Var<'t>> {
    let h = tape.constant(x.clone()).matmul(p[0])?.add_row(p[1])?.relu()?;
    let err = h.matmul(p[2])?.sub(tape.constant(y.clone()))?;
    err.inner_product(err)?.scale(1.0 / x.rows() as f64)
}

fn main() -> manydg::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut rand = |r: usize, c: usize| {
        Tensor::matrix(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    };
    let x = rand(64, 3);
    let y = Tensor::matrix(64, 1, (0..64).map(|i| x.row(i)[0] * x.row(i)[1] - x.row(i)[2]).collect())?;
    let mut params = vec![rand(3, 16), Tensor::vector(vec![0.0; 16]), rand(16, 1)];

    let report = finite_difference_check(|t, p| loss(t, p, &x, &y), &params, DEFAULT_FD_STEP)?;
    println!("gradient check over {} coordinates: max relative error {:.2e}", report.coordinates, report.max_relative_error);

    for step in 0..=300 {
        let tape = Tape::new();
        let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
        let l = loss(&tape, &vars, &x, &y)?;
        let grads = l.backward()?;
        if step % 100 == 0 {
            println!("step {step:>3}: mse {:.5}", l.item()?);
        }
        for (p, v) in params.iter_mut().zip(&vars) {
            let g = grads.get(*v).unwrap();
            p.data_mut().iter_mut().zip(g.data()).for_each(|(w, d)| *w -= 0.1 * d);
        }
    }
    Ok(())
}
