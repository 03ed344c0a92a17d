//! Parameterized building blocks: linear layers, MLPs, backbones, the prototype head,
//! the Adam optimizer and checkpoints.

mod checkpoint;
mod layers;
mod optim;
mod params;

pub use checkpoint::{Checkpoint, NamedArray};
pub use layers::{prototype_probs, Backbone, Linear, Mlp3, PrototypeHead};
pub use optim::Adam;
pub use params::{init_uniform, Bound, ParamId, ParamSet};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Tape, Tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let build = |seed| {
            let mut ps = ParamSet::new();
            Linear::new(&mut ps, "l", 9, 5, true, &mut rng(seed)).unwrap();
            ps
        };
        assert_eq!(build(1), build(1));
        assert_ne!(build(1), build(2));
        let ps = build(3);
        assert!(ps.values().iter().flat_map(|t| t.data()).all(|x| x.abs() <= 1.0 / 3.0));
    }

    #[test]
    fn zero_dimension_is_config_error() {
        let mut ps = ParamSet::new();
        assert!(matches!(
            Linear::new(&mut ps, "l", 0, 3, true, &mut rng(0)),
            Err(crate::Error::Config(_))
        ));
    }

    #[test]
    fn linear_forward_examples() {
        let mut ps = ParamSet::new();
        let l = Linear::new(&mut ps, "l", 2, 2, true, &mut rng(0)).unwrap();
        ps.set(l.weight, Tensor::identity(2)).unwrap();
        ps.set(l.bias.unwrap(), Tensor::zeros(&[2])).unwrap();
        let tape = Tape::new();
        let p = ps.bind_frozen(&tape);
        let x = tape.constant(Tensor::from_rows(&[vec![0.5, -2.0]]).unwrap());
        assert_eq!(l.forward(&p, x).unwrap().value().data(), &[0.5, -2.0]);

        let mut ps = ParamSet::new();
        let l = Linear::new(&mut ps, "l", 2, 1, false, &mut rng(0)).unwrap();
        ps.set(l.weight, Tensor::from_rows(&[vec![1.0, 1.0]]).unwrap()).unwrap();
        let tape = Tape::new();
        let p = ps.bind_frozen(&tape);
        let x = tape.constant(Tensor::from_rows(&[vec![2.0, 3.0]]).unwrap());
        assert_eq!(l.forward(&p, x).unwrap().value().data(), &[5.0]);

        let mut ps = ParamSet::new();
        let l = Linear::new(&mut ps, "l", 3, 2, true, &mut rng(0)).unwrap();
        ps.set(l.weight, Tensor::zeros(&[2, 3])).unwrap();
        ps.set(l.bias.unwrap(), Tensor::vector(vec![0.25, -1.0])).unwrap();
        let tape = Tape::new();
        let p = ps.bind_frozen(&tape);
        let x = tape.constant(Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap());
        assert_eq!(l.forward(&p, x).unwrap().value().data(), &[0.25, -1.0, 0.25, -1.0]);
        let bad = tape.constant(Tensor::zeros(&[1, 4]));
        assert!(l.forward(&p, bad).is_err());
    }

    fn identity_mlp(d: usize) -> (ParamSet, Mlp3) {
        let mut ps = ParamSet::new();
        let net = Mlp3::new(&mut ps, "enc", d, d, d, &mut rng(0)).unwrap();
        for l in &net.layers {
            ps.set(l.weight, Tensor::identity(d)).unwrap();
            ps.set(l.bias.unwrap(), Tensor::zeros(&[d])).unwrap();
        }
        (ps, net)
    }

    #[test]
    fn mlp3_examples() {
        let (ps, net) = identity_mlp(3);
        let tape = Tape::new();
        let p = ps.bind_frozen(&tape);
        let x = tape.constant(Tensor::from_rows(&[vec![0.1, 2.0, 3.0]]).unwrap());
        assert_eq!(net.forward(&p, x).unwrap().value().data(), &[0.1, 2.0, 3.0]);
        let neg = tape.constant(Tensor::from_rows(&[vec![-0.1, -2.0, -3.0]]).unwrap());
        assert_eq!(net.forward(&p, neg).unwrap().value().data(), &[0.0, 0.0, 0.0]);

        let mut ps = ParamSet::new();
        let enc = Mlp3::new(&mut ps, "enc", 8, 8, 8, &mut rng(4)).unwrap();
        let tape = Tape::new();
        let p = ps.bind_frozen(&tape);
        let x = tape.constant(Tensor::zeros(&[5, 8]));
        assert_eq!(enc.forward(&p, x).unwrap().shape(), vec![5, 8]);
    }

    #[test]
    fn prototype_probs_examples() {
        let p = prototype_probs(&Tensor::identity(3), &Tensor::zeros(&[1, 3]), 0.5).unwrap();
        assert!(p.data().iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        // softmax([1, 0]) and softmax([2, 0]) at 30 digits
        let v = Tensor::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let p = prototype_probs(&Tensor::identity(2), &v, 1.0).unwrap();
        assert!((p.data()[0] - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((p.data()[1] - 0.268_941_421_369_995_1).abs() < 1e-15);
        let p = prototype_probs(&Tensor::identity(2), &v, 0.5).unwrap();
        assert!((p.data()[0] - 0.880_797_077_977_882_4).abs() < 1e-15);
        assert!((p.data()[1] - 0.119_202_922_022_117_56).abs() < 1e-15);
        assert!(prototype_probs(&Tensor::identity(2), &v, 0.0).is_err());
        assert!(prototype_probs(&Tensor::identity(2), &v, -1.0).is_err());
    }

    #[test]
    fn prototype_head_needs_two_classes() {
        let mut ps = ParamSet::new();
        assert!(PrototypeHead::new(&mut ps, "h", 1, 4, 0.5, &mut rng(0)).is_err());
        assert!(PrototypeHead::new(&mut ps, "h", 2, 4, 0.0, &mut rng(0)).is_err());
    }

    #[test]
    fn backbone_shapes_and_gradient_reach() {
        let mut ps = ParamSet::new();
        let bb = Backbone::new(&mut ps, "bb", 16, &[8, 8], &mut rng(9)).unwrap();
        let x = Tensor::new(vec![4, 16], (0..64).map(|i| ((i * 37) % 11) as f64 / 10.0).collect()).unwrap();
        let tape = Tape::new();
        let p = ps.bind(&tape);
        let v = bb.forward(&p, tape.constant(x.clone())).unwrap();
        assert_eq!(v.shape(), vec![4, 8]);
        let again = {
            let t2 = Tape::new();
            let p2 = ps.bind_frozen(&t2);
            let out = bb.forward(&p2, t2.constant(x)).unwrap().value();
            (*out).clone()
        };
        assert_eq!(*v.value(), again);
        let loss = v.inner_product(v).unwrap();
        let grads = p.collect_grads(&loss.backward().unwrap());
        for (g, (name, _)) in grads.iter().zip(ps.iter()) {
            assert!(g.norm() > 0.0, "{name} received no gradient");
        }
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut ps = ParamSet::new();
        Mlp3::new(&mut ps, "dec", 6, 4, 3, &mut rng(2)).unwrap();
        let ck = Checkpoint::from_params(serde_json::json!({"kind": "test"}), &ps);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        ck.save(&path).unwrap();
        let mut other = ParamSet::new();
        Mlp3::new(&mut other, "dec", 6, 4, 3, &mut rng(99)).unwrap();
        Checkpoint::load(&path).unwrap().load_into(&mut other).unwrap();
        assert_eq!(ps, other);
    }
}
