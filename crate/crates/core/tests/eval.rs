use manydg::data::Split;
use manydg::eval::{
    accuracy, all_pairs_cosine, cohens_kappa, fit_linear_probe, macro_f1, majority_vote, matched_cosine,
    norm_scatter, weight_cosine_report, write_norm_scatter, z_similarity, ConfusionMatrix, DumpRow, EmbeddingDump,
    ProbeConfig, Standardizer,
};
use manydg::method::orthogonal_project;
use manydg::tensor::Tensor;
use manydg::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn metric_examples() {
    let diag = ConfusionMatrix::from_counts(3, vec![5, 0, 0, 0, 7, 0, 0, 0, 2]).unwrap();
    assert_eq!(accuracy(&diag).unwrap(), 1.0);
    assert_eq!(cohens_kappa(&diag).unwrap(), 1.0);
    assert_eq!(macro_f1(&diag).unwrap(), 1.0);

    let chance = ConfusionMatrix::from_counts(2, vec![25, 25, 25, 25]).unwrap();
    assert_eq!(cohens_kappa(&chance).unwrap(), 0.0);

    // values cross-checked against an independent implementation
    let cm = ConfusionMatrix::from_counts(2, vec![40, 10, 20, 30]).unwrap();
    assert_eq!(accuracy(&cm).unwrap(), 0.7);
    assert!((cohens_kappa(&cm).unwrap() - 0.4).abs() < 1e-12);
    assert!((macro_f1(&cm).unwrap() - 0.696_969_696_969_697).abs() < 1e-12);

    let single = ConfusionMatrix::from_counts(2, vec![9, 0, 0, 0]).unwrap();
    assert_eq!(cohens_kappa(&single).unwrap(), 0.0);
    // class 1 has no support and no predictions
    assert_eq!(macro_f1(&single).unwrap(), 0.5);

    assert!(matches!(accuracy(&ConfusionMatrix::new(3)), Err(Error::Usage(_))));
    assert!(ConfusionMatrix::from_predictions(&[0, 3], &[0, 0], 3).is_err());
}

#[test]
fn majority_vote_six_voters() {
    // 1-based: majority class 1, valid set {1, 3}
    let (maj, set) = majority_vote(&[8, 0, 5, 3, 2, 1]).unwrap();
    assert_eq!(maj + 1, 1);
    assert_eq!(set.iter().map(|k| k + 1).collect::<Vec<_>>(), vec![1, 3]);
    assert_eq!(majority_vote(&[0, 0, 1, 0]).unwrap(), (2, vec![2]));
    assert_eq!(majority_vote(&[5, 5, 0]).unwrap().0, 0);
}

fn brute_force(truth: &[usize], pred: &[usize], k: usize) -> (f64, f64, f64) {
    let n = truth.len() as f64;
    let agree = truth.iter().zip(pred).filter(|(t, p)| t == p).count() as f64;
    let po = agree / n;
    let mut pe = 0.0;
    let mut f1 = 0.0;
    for c in 0..k {
        let t = truth.iter().filter(|&&x| x == c).count() as f64;
        let p = pred.iter().filter(|&&x| x == c).count() as f64;
        let tp = truth.iter().zip(pred).filter(|(&a, &b)| a == c && b == c).count() as f64;
        pe += (t / n) * (p / n);
        let prec = if p > 0.0 { tp / p } else { 0.0 };
        let rec = if t > 0.0 { tp / t } else { 0.0 };
        f1 += if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
    }
    let kappa = if pe == 1.0 { 0.0 } else { (po - pe) / (1.0 - pe) };
    (agree / n, kappa, f1 / k as f64)
}

#[test]
fn metrics_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..1000 {
        let k = rng.gen_range(2..8);
        let n = rng.gen_range(1..200);
        let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let pred: Vec<usize> = truth.iter().map(|&t| if rng.gen_bool(0.6) { t } else { rng.gen_range(0..k) }).collect();
        let cm = ConfusionMatrix::from_predictions(&truth, &pred, k).unwrap();
        let (a, kap, f) = brute_force(&truth, &pred, k);
        assert_eq!(accuracy(&cm).unwrap(), a);
        assert!((cohens_kappa(&cm).unwrap() - kap).abs() <= 1e-12);
        assert!((macro_f1(&cm).unwrap() - f).abs() <= 1e-12);
    }
}

#[test]
fn probe_separable_and_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 200;
    let mut data = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let c = i % 2;
        let x0 = if c == 1 { rng.gen_range(0.5..2.0) } else { rng.gen_range(-2.0..-0.5) };
        // second column is constant, third is noise
        data.extend([x0, 3.0, rng.gen_range(-1.0..1.0)]);
        y.push(c * 7);
    }
    let x = Tensor::matrix(n, 3, data).unwrap();
    let cfg = ProbeConfig::default();
    let probe = fit_linear_probe(&x, &y, &cfg).unwrap();
    assert_eq!(probe.classes, vec![0, 7]);
    assert_eq!(probe.accuracy(&x, &y).unwrap(), 1.0);
    assert_eq!(probe.weights.data()[1], 0.0);
    assert_eq!(probe.weights.data()[4], 0.0);
    assert_eq!(probe, fit_linear_probe(&x, &y, &cfg).unwrap());
    assert!(matches!(fit_linear_probe(&x, &vec![1; n], &cfg), Err(Error::Usage(_))));
}

#[test]
fn standardizer_gives_unit_std() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Tensor::matrix(50, 4, (0..200).map(|i| if i % 4 == 3 { 1.5 } else { rng.gen_range(-9.0..9.0) }).collect())
        .unwrap();
    let s = Standardizer::fit(&x, 1e-8);
    let xs = s.apply(&x).unwrap();
    for j in 0..4 {
        let col: Vec<f64> = (0..50).map(|i| xs.row(i)[j]).collect();
        let mean = col.iter().sum::<f64>() / 50.0;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 50.0).sqrt();
        assert!(mean.abs() < 1e-12);
        if j == 3 {
            assert_eq!(sd, 0.0);
        } else {
            assert!((sd - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn cosine_rows() {
    let a = Tensor::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, -1.0]]).unwrap();
    assert!((matched_cosine(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    let b = Tensor::from_rows(&[vec![-2.0, 1.0, 5.0], vec![3.0, 1.0, 1.0]]).unwrap();
    assert_eq!(matched_cosine(&a, &b).unwrap(), 0.0);
    let e = Tensor::from_rows(&[vec![0.0, 0.0, 1.0]]).unwrap();
    let f = Tensor::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 3.0, 0.0]]).unwrap();
    assert_eq!(all_pairs_cosine(&e, &f).unwrap(), 0.0);
}

fn row(id: usize, domain: u32, label: usize, split: Split, v: Vec<f64>, z: Vec<f64>) -> DumpRow {
    let r = orthogonal_project(&Tensor::vector(v.clone()), &Tensor::vector(z.clone())).unwrap();
    DumpRow {
        id,
        domain,
        label,
        split,
        v,
        z,
        v_par: r.v_par.into_data(),
        v_perp: r.v_perp.into_data(),
    }
}

fn random_dump(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingDump {
    let mut dump = EmbeddingDump::new(d);
    for i in 0..n {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let split = [Split::Train, Split::Val, Split::Test][i % 3];
        dump.push(row(i, (i % 4) as u32, i % 3, split, v, z)).unwrap();
    }
    dump
}

#[test]
fn dump_round_trip_and_header() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dump = random_dump(&mut rng, 12, 3);
    let mut buf = Vec::new();
    dump.write_to(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("id,domain,label,split,v_0,v_1,v_2,z_0,"));
    assert!(text.lines().next().unwrap().ends_with("v_perp_2"));
    assert_eq!(EmbeddingDump::read_from(&buf[..]).unwrap(), dump);
    assert!(EmbeddingDump::read_from("id,domain,label\n".as_bytes()).is_err());
    let mut bad = EmbeddingDump::new(2);
    assert!(bad.push(row(0, 0, 0, Split::Train, vec![1.0; 3], vec![1.0; 3])).is_err());
}

#[test]
fn norm_scatter_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dump = random_dump(&mut rng, 40, 5);
    let rows = norm_scatter(&dump);
    assert_eq!(rows.len(), 40);
    for (r, d) in rows.iter().zip(dump.rows()) {
        assert!(r.perp_norm >= 0.0 && r.par_norm >= 0.0);
        let v2: f64 = d.v.iter().map(|x| x * x).sum();
        assert!((r.perp_norm.powi(2) + r.par_norm.powi(2) - v2).abs() <= 1e-6 * v2);
    }
    let mut buf = Vec::new();
    write_norm_scatter(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "id,split,perp_norm,par_norm");
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn z_similarity_examples() {
    let mut same = EmbeddingDump::new(2);
    for i in 0..10 {
        same.push(row(i, (i % 3) as u32, 0, Split::Train, vec![1.0, 1.0], vec![0.3, 0.4])).unwrap();
    }
    let s = z_similarity(&same, 1000, 0).unwrap();
    assert!((s.within - 1.0).abs() < 1e-12 && (s.cross - 1.0).abs() < 1e-12);

    let mut ortho = EmbeddingDump::new(3);
    for i in 0..30 {
        let d = i % 3;
        let mut z = vec![0.0; 3];
        z[d] = 1.0 + i as f64;
        ortho.push(row(i, d as u32, 0, Split::Test, vec![1.0, 2.0, 3.0], z)).unwrap();
    }
    for cap in [5, 10_000] {
        let s = z_similarity(&ortho, cap, 1).unwrap();
        assert!((s.within - 1.0).abs() < 1e-12);
        assert_eq!(s.cross, 0.0);
    }
    assert_eq!(z_similarity(&ortho, 10_000, 0).unwrap().within_pairs, 3 * 45);

    let mut lonely = EmbeddingDump::new(1);
    lonely.push(row(0, 0, 0, Split::Train, vec![1.0], vec![1.0])).unwrap();
    lonely.push(row(1, 1, 0, Split::Train, vec![1.0], vec![1.0])).unwrap();
    assert!(z_similarity(&lonely, 10, 0).is_err());
}

#[test]
fn probe_report_on_constructed_embeddings() {
    // labels live in dims 0..2, domains in dims 2..4, z spans the domain dims
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut dump = EmbeddingDump::new(4);
    for i in 0..400 {
        let label = i % 2;
        let domain = (i / 2) % 3;
        let mut v: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.3..0.3)).collect();
        v[label] += 2.0;
        v[2 + domain.min(1)] += 2.0 * (1.0 + domain as f64);
        let z = vec![0.0, 0.0, v[2], v[3]];
        dump.push(row(i, domain as u32, label, Split::Train, v, z)).unwrap();
    }
    let report = weight_cosine_report(&dump, &ProbeConfig::default()).unwrap();
    for (_, value) in report.rows() {
        assert!((-1.0..=1.0).contains(&value));
    }
    assert!(report.v_perp_labels > 0.9, "{report:?}");
    assert!(report.v_par_domains > 0.9, "{report:?}");
    assert!(report.v_perp_labels - report.labels_vs_domains >= 0.3, "{report:?}");

    let mut one_domain = EmbeddingDump::new(2);
    for i in 0..10 {
        one_domain.push(row(i, 0, i % 2, Split::Train, vec![1.0, i as f64], vec![1.0, 0.0])).unwrap();
    }
    assert!(matches!(weight_cosine_report(&one_domain, &ProbeConfig::default()), Err(Error::Usage(_))));
}
