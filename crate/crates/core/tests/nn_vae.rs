use tnvae::data::{gen_spiral, SpiralConfig};
use tnvae::nn::{
    kl_to_standard_normal, mlp_gradient, reparameterize, Activation, DiagGaussian, Matrix, MlpNetwork, RngStream,
};
use tnvae::vae::{objective, Variant, VaeModel, VaeSpec};

fn random_matrix(rng: &mut RngStream, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    rng.fill_normal(m.as_mut_slice());
    m
}

/// Straight-line evaluation of a 2-layer tanh network, written independently
/// of the library's batched kernels.
fn two_layer_by_hand(net: &MlpNetwork, x: &[f64]) -> Vec<f64> {
    let l = net.layers();
    let (w1, b1, w2, b2) = (&l[0].weight, &l[0].bias, &l[1].weight, &l[1].bias);
    let mut h = vec![0.0; w1.rows()];
    for (i, hi) in h.iter_mut().enumerate() {
        let mut s = b1[i];
        for (j, xj) in x.iter().enumerate() {
            s += w1.get(i, j) * xj;
        }
        *hi = s.tanh();
    }
    (0..w2.rows())
        .map(|i| b2[i] + h.iter().enumerate().map(|(j, hj)| w2.get(i, j) * hj).sum::<f64>())
        .collect()
}

#[test]
fn forward_matches_hand_evaluation() {
    let mut rng = RngStream::new(5);
    let net = MlpNetwork::init(&[4, 7, 3], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
    for _ in 0..10 {
        let x: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let got = net.forward(&x).unwrap();
        let want = two_layer_by_hand(&net, &x);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-14 * w.abs().max(1.0), "{g} vs {w}");
        }
    }
}

#[test]
fn batch_forward_equals_row_forward() {
    let mut rng = RngStream::new(6);
    let net = MlpNetwork::init(&[5, 9, 9, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
    let x = random_matrix(&mut rng, 13, 5);
    let batch = net.forward_batch(&x).unwrap();
    for i in 0..13 {
        assert_eq!(batch.row(i), net.forward(x.row(i)).unwrap().as_slice());
    }
}

#[test]
fn three_layer_gradient_matches_finite_differences() {
    for seed in 0..10 {
        let mut rng = RngStream::new(100 + seed);
        let net = MlpNetwork::init(&[3, 6, 5, 4, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let x = random_matrix(&mut rng, 4, 3);
        let target = random_matrix(&mut rng, 4, 2);
        let loss_of = |out: &Matrix| -> (f64, Matrix) {
            let mut d = Matrix::zeros(out.rows(), out.cols());
            let mut loss = 0.0;
            for (k, (o, t)) in out.as_slice().iter().zip(target.as_slice()).enumerate() {
                loss += 0.5 * (o - t).powi(2);
                d.as_mut_slice()[k] = o - t;
            }
            (loss, d)
        };
        let (_, grads) = mlp_gradient(&net, &x, loss_of).unwrap();
        let h = 1e-5;
        for (ti, g) in grads.tensors().iter().enumerate() {
            for (j, &a) in g.iter().enumerate() {
                let eval = |delta: f64| {
                    let mut n = net.clone();
                    n.params_mut()[ti][j] += delta;
                    loss_of(&n.forward_batch(&x).unwrap()).0
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let scale = a.abs().max(numeric.abs());
                if scale > 1e-7 {
                    assert!((a - numeric).abs() / scale < 1e-4, "seed {seed} tensor {ti}[{j}]: {a} vs {numeric}");
                }
            }
        }
    }
}

#[test]
fn kl_matches_monte_carlo_in_one_dimension() {
    // q = N(0, 2) against N(0, 1)
    let q = DiagGaussian::new(vec![0.0], vec![2f64.ln()]).unwrap();
    let exact = kl_to_standard_normal(&q).unwrap();
    assert!((exact - 0.5 * (2.0 - 1.0 - 2f64.ln())).abs() < 1e-15);
    let mut rng = RngStream::new(9);
    let n = 1_000_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let z = 2f64.sqrt() * rng.normal();
        // log q(z) − log p(z)
        let r = -0.5 * z * z / 2.0 - 0.5 * 2f64.ln() + 0.5 * z * z;
        s += r;
        s2 += r * r;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn reparameterized_draws_have_unit_moments() {
    let q = DiagGaussian::standard(1);
    let mut rng = RngStream::new(12);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| reparameterize(&q, &mut rng)[0]).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((var - 1.0).abs() < 0.05, "variance {var}");
}

fn small_model(variant: Variant, beta: f64, seed: u64) -> VaeModel {
    let spec = VaeSpec {
        input_dim: 5,
        hidden: vec![8, 8],
        latent_dim: 2,
        variant,
        beta,
        activation: Activation::Tanh,
    };
    VaeModel::init(&spec, &mut RngStream::new(seed)).unwrap()
}

#[test]
fn objective_matches_hand_composition() {
    for variant in [Variant::Standard, Variant::TimeNeighbor] {
        let model = small_model(variant, 0.37, 21);
        let mut rng = RngStream::new(22);
        let series = random_matrix(&mut rng, 7, 5);
        let rows: Vec<usize> = (0..6).collect();
        let x = series.select_rows(&rows);
        let targets = match variant {
            Variant::Standard => x.clone(),
            Variant::TimeNeighbor => series.select_rows(&(1..7).collect::<Vec<_>>()),
        };
        let eps = random_matrix(&mut rng, 6, 2);

        let (mut sq, mut kl) = (0.0, 0.0);
        for i in 0..6 {
            let out = model.encoder.forward(x.row(i)).unwrap();
            let q = DiagGaussian::new(out[..2].to_vec(), out[2..].to_vec()).unwrap();
            kl += kl_to_standard_normal(&q).unwrap();
            let z: Vec<f64> = (0..2)
                .map(|k| q.mean[k] + (0.5 * q.log_var[k]).exp() * eps.get(i, k))
                .collect();
            let recon = model.decoder.forward(&z).unwrap();
            sq += recon.iter().zip(targets.row(i)).map(|(r, t)| (r - t).powi(2)).sum::<f64>();
        }
        let recon = sq / 30.0;
        let kl = kl / 6.0;
        let total = recon + 0.37 * kl;

        let (got, _) = objective(&model, &x, &targets, &eps, false).unwrap();
        assert!((got.recon - recon).abs() <= 1e-12 * recon, "{variant:?}");
        assert!((got.kl - kl).abs() <= 1e-12 * kl, "{variant:?}");
        assert!((got.total - total).abs() <= 1e-12 * total, "{variant:?}");
    }
}

#[test]
fn encode_is_deterministic_and_indexes_by_variant() {
    let spiral = gen_spiral(&SpiralConfig {
        n_points: 300,
        embed_dim: 5,
        ..Default::default()
    })
    .unwrap()
    .series;
    for (variant, first) in [(Variant::Standard, 0), (Variant::TimeNeighbor, 1)] {
        let model = small_model(variant, 1e-3, 3);
        let enc = model.encode_series(&spiral).unwrap();
        assert_eq!(enc.len(), 300);
        let want: Vec<i64> = (first..first + 300).collect();
        assert_eq!(enc.time_indices(), want.as_slice());
        for t in [0usize, 137, 299] {
            let (q, idx) = model.encode(spiral.row(t), t as i64).unwrap();
            assert_eq!(idx, t as i64 + first);
            assert_eq!(enc.z().row(t), q.mean.as_slice());
            let (again, _) = model.encode(spiral.row(t), t as i64).unwrap();
            assert_eq!(q, again);
        }
    }
}
