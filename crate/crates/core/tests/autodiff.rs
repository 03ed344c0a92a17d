use manydg::tensor::{finite_difference_check, Primitive, Tape, Tensor, Var, DEFAULT_FD_STEP};
use manydg::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn t(rows: &[Vec<f64>]) -> Tensor {
    Tensor::from_rows(rows).unwrap()
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Entries bounded away from zero so that kinks are never straddled by ±h.
fn random_off_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    random(rng, shape).map(|x| if x >= 0.0 { x + 0.05 } else { x - 0.05 })
}

#[test]
fn matmul_examples() {
    let tape = Tape::new();
    let a = tape.constant(t(&[vec![1.0, 2.0], vec![3.0, 4.0]]));
    let eye = tape.constant(Tensor::identity(2));
    assert_eq!(*a.matmul(eye).unwrap().value(), t(&[vec![1.0, 2.0], vec![3.0, 4.0]]));
    let ones = tape.constant(t(&[vec![1.0], vec![1.0]]));
    assert_eq!(a.matmul(ones).unwrap().value().data(), &[3.0, 7.0]);
    let z = tape.constant(Tensor::zeros(&[2, 3]));
    let any = tape.constant(random(&mut ChaCha8Rng::seed_from_u64(1), &[3, 4]));
    let out = z.matmul(any).unwrap().value();
    assert_eq!(out.shape(), &[2, 4]);
    assert!(out.data().iter().all(|&x| x == 0.0));
    assert!(matches!(a.matmul(any), Err(Error::Dimension { .. })));
}

#[test]
fn elementwise_examples() {
    let tape = Tape::new();
    let x = tape.constant(Tensor::vector(vec![-1.0, 0.0, 2.0]));
    assert_eq!(x.relu().unwrap().value().data(), &[0.0, 0.0, 2.0]);
    let zeros = tape.constant(Tensor::zeros(&[3]));
    assert_eq!(*x.add(zeros).unwrap().value(), *x.value());
    let y = tape.constant(Tensor::vector(vec![1.0, 2.0]));
    assert_eq!(y.scale(2.0).unwrap().value().data(), &[2.0, 4.0]);
    assert!(matches!(x.add(y), Err(Error::Dimension { .. })));
}

#[test]
fn reduce_examples() {
    let tape = Tape::new();
    let a = tape.constant(Tensor::vector(vec![3.0, 4.0]));
    assert_eq!(a.l2_norm().unwrap().item().unwrap(), 5.0);
    let b = tape.constant(Tensor::vector(vec![1.0, 2.0]));
    let c = tape.constant(Tensor::vector(vec![3.0, 4.0]));
    assert_eq!(b.inner_product(c).unwrap().item().unwrap(), 11.0);
    let m = tape.constant(t(&[vec![1.0, 3.0], vec![3.0, 5.0]]));
    assert_eq!(m.mean_rows().unwrap().value().data(), &[2.0, 4.0]);
    assert!(b.mean_rows().is_err());
}

#[test]
fn log_softmax_examples() {
    let tape = Tape::new();
    let ln2 = 2f64.ln();
    let out = tape.constant(t(&[vec![0.0, 0.0]])).log_softmax_rows().unwrap().value();
    assert!(out.data().iter().all(|x| (x + ln2).abs() < 1e-15));
    let out = tape.constant(t(&[vec![5.0, 5.0, 5.0]])).log_softmax_rows().unwrap().value();
    assert!(out.data().iter().all(|x| (x + 3f64.ln()).abs() < 1e-15));
    // high-precision reference: log(1/(1+e^-2)), log(1/(1+e^2))
    let out = tape.constant(t(&[vec![2.0, 0.0]])).log_softmax_rows().unwrap().value();
    assert!((out.data()[0] - -0.126_928_011_042_972_5).abs() < 1e-15);
    assert!((out.data()[1] - -2.126_928_011_042_972_5).abs() < 1e-14);
}

#[test]
fn log_softmax_rows_are_simplices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let x = random(&mut rng, &[4, 6]).scaled(30.0);
        let tape = Tape::new();
        let y = tape.constant(x).log_softmax_rows().unwrap().value();
        for r in 0..4 {
            let s: f64 = y.row(r).iter().map(|v| v.exp()).sum();
            assert!((s - 1.0).abs() <= 1e-12, "row sum {s}");
        }
    }
}

#[test]
fn stop_gradient_examples() {
    let tape = Tape::new();
    let x = tape.param(Tensor::vector(vec![1.0, 2.0]));
    assert_eq!(x.stop_gradient().unwrap().value().data(), &[1.0, 2.0]);

    // d/dx sg(x)·x at x = 3 is 3
    let tape = Tape::new();
    let x = tape.param(Tensor::scalar(3.0));
    let y = x.stop_gradient().unwrap().mul(x).unwrap();
    assert_eq!(y.backward().unwrap().get(x).unwrap().data(), &[3.0]);

    // ‖sg(v_μ)‖² contributes nothing
    let tape = Tape::new();
    let v = tape.param(t(&[vec![1.0, 2.0], vec![3.0, -1.0]]));
    let mu = v.mean_rows().unwrap().stop_gradient().unwrap();
    let sq = mu.inner_product(mu).unwrap();
    assert!(!sq.is_tracked());
    assert!(matches!(sq.backward(), Err(Error::Usage(_))));
    let zero = tape.constant(Tensor::scalar(0.0));
    let loss = sq.add(v.l2_norm().unwrap().mul(zero).unwrap()).unwrap();
    let g = loss.backward().unwrap();
    assert!(g.get(v).unwrap().data().iter().all(|&x| x == 0.0));
}

#[test]
fn backward_examples() {
    let tape = Tape::new();
    let x = tape.param(Tensor::vector(vec![1.0, 2.0]));
    let g = x.inner_product(x).unwrap().backward().unwrap();
    assert_eq!(g.get(x).unwrap().data(), &[2.0, 4.0]);

    let tape = Tape::new();
    let x = tape.param(Tensor::scalar(1.0));
    let g = x.neg().unwrap().relu().unwrap().backward().unwrap();
    assert_eq!(g.get(x).unwrap().data(), &[0.0]);

    let tape = Tape::new();
    let x = tape.param(Tensor::vector(vec![3.0, 4.0]));
    let g = x.l2_norm().unwrap().backward().unwrap();
    let gx = g.get(x).unwrap();
    assert!((gx.data()[0] - 0.6).abs() < 1e-15 && (gx.data()[1] - 0.8).abs() < 1e-15);
}

#[test]
fn backward_requires_tracked_scalar() {
    let tape = Tape::new();
    let c = tape.constant(Tensor::scalar(1.0));
    assert!(matches!(c.backward(), Err(Error::Usage(_))));
    let p = tape.param(Tensor::vector(vec![1.0, 2.0]));
    assert!(matches!(p.relu().unwrap().backward(), Err(Error::Usage(_))));
}

#[test]
fn every_tracked_leaf_gets_a_gradient() {
    let tape = Tape::new();
    let a = tape.param(Tensor::vector(vec![1.0, 2.0]));
    let unused = tape.param(Tensor::zeros(&[3, 3]));
    let loss = a.l2_norm().unwrap();
    let late = tape.param(Tensor::scalar(4.0));
    let g = loss.backward().unwrap();
    assert_eq!(g.len(), 3);
    assert_eq!(g.get(unused).unwrap().shape(), &[3, 3]);
    assert_eq!(g.get(late).unwrap().data(), &[0.0]);
}

#[test]
fn l2_norm_at_zero_has_zero_gradient() {
    let tape = Tape::new();
    let x = tape.param(Tensor::zeros(&[3]));
    let g = x.l2_norm().unwrap().backward().unwrap();
    assert!(g.get(x).unwrap().data().iter().all(|&v| v == 0.0));
}

#[test]
fn non_finite_values_are_errors() {
    let tape = Tape::new();
    let a = tape.constant(Tensor::vector(vec![1.0]));
    let z = tape.constant(Tensor::vector(vec![0.0]));
    assert!(matches!(a.div(z), Err(Error::NonFinite { .. })));
}

#[test]
fn quadratic_passes_fd_check() {
    let x = Tensor::vector(vec![0.3, -1.2, 2.0, 0.7]);
    let report = finite_difference_check(
        |_, p: &[Var<'_>]| p[0].inner_product(p[0]),
        &[x],
        DEFAULT_FD_STEP,
    )
    .unwrap();
    assert!(report.max_relative_error < 1e-6, "{report:?}");
}

#[test]
fn fd_check_detects_corrupted_matmul_backward() {
    fn bad_matmul<'t>(a: Var<'t>, b: Var<'t>) -> manydg::Result<Var<'t>> {
        let value = a.value().matmul(&b.value())?;
        a.tape().custom(
            &[a, b],
            value,
            Box::new(|g, ins| {
                // correct rule would be g·bᵀ and aᵀ·g; grad_a is off by 30%
                let ga = g.matmul(&ins[1].transpose()).unwrap().scaled(1.3);
                let gb = ins[0].transpose().matmul(g).unwrap();
                vec![ga, gb]
            }),
        )
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random(&mut rng, &[3, 4]);
    let b = random(&mut rng, &[4, 2]);
    let r = random(&mut rng, &[3, 2]);

    let good = finite_difference_check(
        |tape, p| {
            let w = tape.constant(r.clone());
            p[0].matmul(p[1])?.inner_product(w)
        },
        &[a.clone(), b.clone()],
        DEFAULT_FD_STEP,
    )
    .unwrap();
    assert!(good.max_relative_error < 1e-6);

    let bad = finite_difference_check(
        |tape, p| {
            let w = tape.constant(r.clone());
            bad_matmul(p[0], p[1])?.inner_product(w)
        },
        &[a, b],
        DEFAULT_FD_STEP,
    )
    .unwrap();
    assert!(bad.max_relative_error > 1e-2, "{bad:?}");
}

type Builder = for<'t> fn(&'t Tape, &[Var<'t>]) -> manydg::Result<Var<'t>>;

/// Each primitive is wrapped as `⟨prim(inputs), R⟩` with a fixed random `R`
/// (the last parameter). `stop_gradient` is excluded: its contract is a zero
/// gradient, which central differences cannot see.
fn primitive_cases(rng: &mut ChaCha8Rng) -> Vec<(&'static str, Builder, Vec<Tensor>)> {
    let m = rng.gen_range(1..=8);
    let k = rng.gen_range(1..=8);
    let n = rng.gen_range(1..=8);
    vec![
        ("matmul", |_, p| p[0].matmul(p[1])?.inner_product(p[2]), vec![random(rng, &[m, k]), random(rng, &[k, n]), random(rng, &[m, n])]),
        ("matmul_nt", |_, p| p[0].matmul_nt(p[1])?.inner_product(p[2]), vec![random(rng, &[m, k]), random(rng, &[n, k]), random(rng, &[m, n])]),
        ("add", |_, p| p[0].add(p[1])?.inner_product(p[2]), vec![random(rng, &[m, n]), random(rng, &[m, n]), random(rng, &[m, n])]),
        ("sub", |_, p| p[0].sub(p[1])?.inner_product(p[2]), vec![random(rng, &[m, n]), random(rng, &[m, n]), random(rng, &[m, n])]),
        ("mul", |_, p| p[0].mul(p[1])?.inner_product(p[2]), vec![random(rng, &[m, n]), random(rng, &[m, n]), random(rng, &[m, n])]),
        ("div", |_, p| p[0].div(p[1])?.inner_product(p[2]), vec![random(rng, &[m, n]), random_off_zero(rng, &[m, n]).map(|x| x + 2.0 * x.signum()), random(rng, &[m, n])]),
        ("scale", |_, p| p[0].scale(-1.7)?.inner_product(p[1]), vec![random(rng, &[m, n]), random(rng, &[m, n])]),
        ("relu", |_, p| p[0].relu()?.inner_product(p[1]), vec![random_off_zero(rng, &[m, n]), random(rng, &[m, n])]),
        ("add_row", |_, p| p[0].add_row(p[1])?.inner_product(p[2]), vec![random(rng, &[m, n]), random(rng, &[n]), random(rng, &[m, n])]),
        ("mean_rows", |_, p| p[0].mean_rows()?.inner_product(p[1]), vec![random(rng, &[m, n]), random(rng, &[n])]),
        ("l2_norm", |_, p| p[0].l2_norm()?.mul(p[1]), vec![random(rng, &[m, n]), random(rng, &[1])]),
        ("inner_product", |_, p| p[0].inner_product(p[1])?.mul(p[2]), vec![random(rng, &[m, n]), random(rng, &[m, n]), random(rng, &[1])]),
        ("rows_dot", |_, p| p[0].rows_dot(p[1])?.inner_product(p[2]), vec![random(rng, &[m, n]), random(rng, &[m, n]), random(rng, &[m, 1])]),
        ("rows_norm", |_, p| p[0].rows_norm()?.inner_product(p[1]), vec![random(rng, &[m, n]), random(rng, &[m, 1])]),
        ("scale_rows", |_, p| p[0].scale_rows(p[1])?.inner_product(p[2]), vec![random(rng, &[m, n]), random(rng, &[m, 1]), random(rng, &[m, n])]),
        ("recip_guarded", |_, p| p[0].recip_guarded(1e-8)?.inner_product(p[1]), vec![random_off_zero(rng, &[m, 1]).map(|x| x + x.signum()), random(rng, &[m, 1])]),
        ("log_softmax_rows", |_, p| p[0].log_softmax_rows()?.inner_product(p[1]), vec![random(rng, &[m, n]).scaled(3.0), random(rng, &[m, n])]),
        ("gather_rows", |_, p| p[0].gather_rows(&[0, 0, 0])?.inner_product(p[1]), vec![random(rng, &[m, n]), random(rng, &[3, n])]),
        ("concat_cols", |_, p| p[0].concat_cols(p[1])?.inner_product(p[2]), vec![random(rng, &[m, k]), random(rng, &[m, n]), random(rng, &[m, k + n])]),
    ]
}

#[test]
fn every_primitive_matches_finite_differences_over_100_seeds() {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, f, params) in primitive_cases(&mut rng) {
            let report = finite_difference_check(f, &params, DEFAULT_FD_STEP).unwrap();
            assert!(
                report.max_relative_error < 1e-4,
                "{name} seed {seed}: {report:?}"
            );
            worst = worst.max(report.max_relative_error);
        }
    }
    println!("worst per-primitive relative error: {worst:.3e}");
}

#[test]
fn stop_gradient_blocks_subgraph() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tape = Tape::new();
    let a = tape.param(random(&mut rng, &[3, 4]));
    let b = tape.param(random(&mut rng, &[4, 2]));
    let detached = a.matmul(b).unwrap().relu().unwrap().stop_gradient().unwrap();
    let c = tape.param(random(&mut rng, &[3, 2]));
    let loss = detached.inner_product(c).unwrap();
    let g = loss.backward().unwrap();
    assert!(g.get(a).unwrap().data().iter().all(|&x| x == 0.0));
    assert!(g.get(b).unwrap().data().iter().all(|&x| x == 0.0));
    assert_eq!(*g.get(c).unwrap(), *detached.value());
}

#[test]
fn recording_and_gradients_are_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tape = Tape::new();
        let x = tape.param(random(&mut rng, &[4, 5]));
        let w = tape.param(random(&mut rng, &[3, 5]));
        let y = x.matmul_nt(w).unwrap().log_softmax_rows().unwrap().mean_rows().unwrap();
        let loss = y.inner_product(y).unwrap();
        let g = loss.backward().unwrap();
        (
            tape.records(),
            loss.item().unwrap().to_bits(),
            g.get(x).unwrap().clone(),
            g.get(w).unwrap().clone(),
        )
    };
    let (r1, l1, gx1, gw1) = run();
    let (r2, l2, gx2, gw2) = run();
    assert_eq!(r1, r2);
    assert_eq!(l1, l2);
    assert!(gx1.data().iter().zip(gx2.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(gw1.data().iter().zip(gw2.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(r1[2].primitive, Primitive::MatMulNt);
    // topological order: inputs always precede their consumer
    assert!(r1.iter().all(|r| r.inputs.iter().all(|i| i.0 < r.output.0)));
}
