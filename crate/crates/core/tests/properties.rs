use half::f16;
use proptest::prelude::*;

use octopus::baselines::{BaselineCodec, BaselineConfig, BaselineKind};
use octopus::codec::{
    attention_decode, joint_round_triplet, pack, pack_keys, triplet_loss, unpack, unpack_keys, CodecConfig,
    CompressedKey, OctopusCodec, PackedBlob, QjlSidecar, Rounding,
};
use octopus::lloydmax::{
    rho_codebook, train_from_density_with_report, train_from_samples, uniform_codebook, xi_codebook, Codebook,
    CodebookKind, CodebookPair, TrainOptions,
};
use octopus::marginals::{sample_unit_sphere, DensityKind, DensitySpec};
use octopus::octahedral::{oct_decode_xy, oct_encode};
use octopus::rng::SampleStream;
use octopus::rotation::RotationSpec;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gaussian_keys(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
    SampleStream::new(seed, 901).gaussian_matrix(count, dim)
}

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

fn dim_strategy() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![8usize, 64, 128])
}

// Rotation

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rotation_preserves_norm_and_inverts((dim, v) in dim_strategy().prop_flat_map(|d| (Just(d), vec_strategy(d))), seed in any::<u64>()) {
        let r = RotationSpec::new(dim, seed).unwrap();
        let y = r.rotate(&v).unwrap();
        let scale = norm(&v).max(1.0);
        prop_assert!((norm(&y) - norm(&v)).abs() <= 1e-5 * scale);
        let back = r.rotate_inverse(&y).unwrap();
        for (a, b) in back.iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-5 * scale);
        }
    }

    #[test]
    fn rotation_preserves_inner_products(
        (dim, a, b) in dim_strategy().prop_flat_map(|d| (Just(d), vec_strategy(d), vec_strategy(d))),
        seed in any::<u64>(),
    ) {
        let r = RotationSpec::new(dim, seed).unwrap();
        let (ra, rb) = (r.rotate(&a).unwrap(), r.rotate(&b).unwrap());
        prop_assert!((dot(&ra, &rb) - dot(&a, &b)).abs() <= 1e-5 * (norm(&a) * norm(&b)).max(1.0));
    }
}

// Octahedral map

fn boundary_points() -> Vec<[f64; 3]> {
    let mut pts = vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]];
    for i in 0..360 {
        let a = (i as f64).to_radians();
        pts.push([a.cos(), a.sin(), 0.0]);
        let z = -(0.05 + 0.9 * (i as f64) / 360.0);
        let s = (1.0 - z * z).sqrt();
        pts.push([s, 0.0, z]);
        pts.push([0.0, -s, z]);
        pts.push([-s, 0.0, z]);
        pts.push([0.0, s, z]);
    }
    pts
}

#[test]
fn octahedral_round_trip_on_sphere_points() {
    let mut pts: Vec<[f64; 3]> =
        sample_unit_sphere(3, &SampleStream::new(11, 3), 100_000).into_iter().map(|p| [p[0], p[1], p[2]]).collect();
    pts.extend(boundary_points());
    let mut worst = 0.0f64;
    for n in pts {
        let c = oct_encode(n);
        let back = oct_decode_xy(c.xi, c.eta);
        for i in 0..3 {
            worst = worst.max((back[i] - n[i]).abs());
        }
    }
    assert!(worst <= 1e-6, "worst round-trip error {worst}");
}

#[test]
fn octahedral_corners_and_south_pole() {
    for (xi, eta) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
        assert_eq!(oct_decode_xy(xi, eta), [0.0, 0.0, -1.0]);
    }
    let c = oct_encode([0.0, 0.0, -1.0]);
    assert_eq!((c.xi, c.eta), (1.0, 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2048))]

    #[test]
    fn octahedral_decode_is_unit(xi in -1.0f64..=1.0, eta in -1.0f64..=1.0) {
        prop_assert!((norm(&oct_decode_xy(xi, eta)) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn octahedral_square_round_trip(xi in -1.0f64..=1.0, eta in -1.0f64..=1.0) {
        let c = oct_encode(oct_decode_xy(xi, eta));
        // Square boundary points fold onto each other; compare directions instead.
        let (a, b) = (oct_decode_xy(c.xi, c.eta), oct_decode_xy(xi, eta));
        for i in 0..3 {
            prop_assert!((a[i] - b[i]).abs() <= 1e-9);
        }
        if xi.abs() + eta.abs() < 1.0 - 1e-9 {
            prop_assert!((c.xi - xi).abs() <= 1e-9 && (c.eta - eta).abs() <= 1e-9);
        }
    }

    #[test]
    fn octahedral_unfold_is_piecewise_linear(x0 in 0.0f64..0.25, y0 in 0.0f64..0.25, dx in 0.0f64..0.1, dy in 0.0f64..0.1) {
        // Inside one open face the unnormalized unfold is affine.
        let u = octopus::octahedral::oct_unfold;
        let (a, b, m) = (u(x0, y0), u(x0 + 2.0 * dx, y0 + 2.0 * dy), u(x0 + dx, y0 + dy));
        for i in 0..3 {
            prop_assert!((m[i] - 0.5 * (a[i] + b[i])).abs() <= 1e-12);
        }
    }
}

// Codebooks

fn argmin_index(cb: &Codebook, x: f64) -> usize {
    // Ties go to the upper cell.
    let c = cb.centroids();
    let mut best = 0;
    for i in 1..c.len() {
        if (x - c[i]).abs() <= (x - c[best]).abs() {
            best = i;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn quantize_index_is_nearest_centroid(bits in 1u8..=5, x in -1.2f64..1.2) {
        let cb = xi_codebook(bits).unwrap();
        let i = cb.quantize_index(x);
        let j = argmin_index(&cb, x);
        let c = cb.centroids();
        prop_assert!(i == j || ((x - c[i]).abs() - (x - c[j]).abs()).abs() <= 1e-15);
    }

    #[test]
    fn density_training_is_monotone(bits in 1u8..=5, which in 0usize..4, dim_pow in 3u32..8) {
        let dim = 1usize << dim_pow;
        let kind = match which {
            0 => DensityKind::RotatedCoordinate { dim },
            1 => DensityKind::TripletNorm { dim },
            2 => DensityKind::OctCoordinate,
            _ => DensityKind::PolarAngle { half: dim / 2 },
        };
        let density = DensitySpec::new(kind).unwrap();
        let (_, report) = train_from_density_with_report(&density, bits, &TrainOptions::default()).unwrap();
        for w in report.distortion.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9), "distortion rose {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn sample_training_gives_sorted_centroids(bits in 1u8..=4, seed in any::<u64>()) {
        let samples: Vec<f64> = SampleStream::new(seed, 5).gaussian_vec(0, 4000);
        let cb = train_from_samples(&samples, bits, &TrainOptions::default()).unwrap();
        prop_assert!(cb.centroids().windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn symmetric_direction_books() {
    for bits in 1..=6 {
        let cb = xi_codebook(bits).unwrap();
        let c = cb.centroids();
        for i in 0..c.len() {
            assert_eq!(c[i], -c[c.len() - 1 - i]);
        }
    }
}

// Encoder

fn codec(dim: usize, b: u8, rounding: Rounding, seed: u64) -> OctopusCodec {
    OctopusCodec::standard(CodecConfig::nominal(dim, b).unwrap().with_rounding(rounding).with_seed(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn triplet_norms_square_sum_to_one((dim, k) in dim_strategy().prop_flat_map(|d| (Just(d), vec_strategy(d))), seed in any::<u64>()) {
        prop_assume!(norm(&k) > 1e-6);
        let c = codec(dim, 3, Rounding::Local3x3, seed);
        let (gamma, u) = c.split_and_rotate(&k).unwrap();
        prop_assert!((gamma - norm(&k)).abs() <= 1e-9 * gamma);
        let s: f64 = c.triplets(&u).iter().map(|t| t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sum();
        prop_assert!((s - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn score_matches_decoded_inner_product(
        (dim, k, q) in dim_strategy().prop_flat_map(|d| (Just(d), vec_strategy(d), vec_strategy(d))),
        b in 2u8..=5,
        seed in any::<u64>(),
    ) {
        let c = codec(dim, b, Rounding::Local3x3, seed);
        let ck = c.encode(&k).unwrap();
        let khat = c.decode(&ck).unwrap();
        let s = c.score(&q, &ck).unwrap();
        prop_assert!((s - dot(&q, &khat)).abs() <= 1e-9 * (norm(&q) * norm(&khat)).max(1e-300));
    }

    #[test]
    fn joint_rounding_dominates_scalar(t in prop::array::uniform3(-1.0f64..1.0), b in 2u8..=5, dim_pow in 3u32..9) {
        let (bd, bn) = (b + 1, b - 1);
        let (xi, rho) = (xi_codebook(bd).unwrap(), rho_codebook(1 << dim_pow, bn).unwrap());
        let r = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
        prop_assume!(r > 0.0);
        let scale = 0.5 / r;
        let t = [t[0] * scale, t[1] * scale, t[2] * scale];
        let loss = |m| triplet_loss(t, &xi, &rho, &joint_round_triplet(t, &xi, &rho, m));
        let (s, l2, l3, f) = (loss(Rounding::Scalar), loss(Rounding::Local2x2), loss(Rounding::Local3x3), loss(Rounding::Full));
        prop_assert!(l2 <= s + 1e-15 && l3 <= l2 + 1e-15 && f <= l3 + 1e-15);
    }

    #[test]
    fn encoding_is_deterministic((dim, k) in dim_strategy().prop_flat_map(|d| (Just(d), vec_strategy(d))), seed in any::<u64>()) {
        let cfg = CodecConfig::nominal(dim, 3).unwrap().with_seed(seed).with_qjl(seed ^ 1);
        let a = OctopusCodec::standard(cfg).unwrap().encode(&k).unwrap();
        let b = OctopusCodec::standard(cfg).unwrap().encode(&k).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn local3x3_matches_full_search() {
    let dirs = sample_unit_sphere(3, &SampleStream::new(21, 7), 10_000);
    let radii = SampleStream::new(21, 8);
    for b_dir in 2..=5u8 {
        let xi = xi_codebook(b_dir).unwrap();
        let rho = rho_codebook(128, 3).unwrap();
        let mut r = vec![0.0; 1];
        for (i, n) in dirs.iter().enumerate() {
            radii.uniforms_at(i as u64, &mut r);
            let t = [n[0] * r[0] * 0.6, n[1] * r[0] * 0.6, n[2] * r[0] * 0.6];
            let a = joint_round_triplet(t, &xi, &rho, Rounding::Local3x3);
            let b = joint_round_triplet(t, &xi, &rho, Rounding::Full);
            assert_eq!((a.xi, a.eta, a.rho), (b.xi, b.eta, b.rho), "b_dir {b_dir}, triplet {t:?}");
        }
    }
}

#[test]
fn re_encoding_a_decoded_key_is_stable() {
    let keys = gaussian_keys(3, 10_000, 128);
    for b in [2u8, 3, 4] {
        let c = codec(128, b, Rounding::Local3x3, 7);
        for k in &keys {
            let a = c.encode(k).unwrap();
            let again = c.encode(&c.decode(&a).unwrap()).unwrap();
            assert_eq!((&a.dir, &a.nrm), (&again.dir, &again.nrm));
        }
    }
}

#[test]
fn zero_key_decodes_to_zero() {
    let c = codec(64, 3, Rounding::Local3x3, 1);
    let ck = c.encode(&vec![0.0; 64]).unwrap();
    assert_eq!(ck.gamma, 0.0);
    assert!(c.decode(&ck).unwrap().iter().all(|&x| x == 0.0));
}

// Small-dimension oracle

fn brute_force(t: [f64; 3], xi: &Codebook, rho: &Codebook) -> (usize, usize, usize) {
    let mut best = (0, 0, 0);
    let mut best_loss = f64::INFINITY;
    for i in 0..xi.len() {
        for j in 0..xi.len() {
            let n = oct_decode_xy(xi.centroid(i), xi.centroid(j));
            for k in 0..rho.len() {
                let r = rho.centroid(k);
                let loss: f64 = (0..3).map(|c| (t[c] - r * n[c]).powi(2)).sum();
                if loss < best_loss - 1e-15 {
                    best_loss = loss;
                    best = (i, j, k);
                }
            }
        }
    }
    best
}

#[test]
fn full_search_matches_exhaustive_oracle_at_small_dims() {
    for dim in [4usize, 8] {
        for b_dir in 1..=3u8 {
            for b_nrm in 1..=3u8 {
                let rho = if dim < 5 { uniform_codebook(0.0, 1.0, b_nrm).unwrap() } else { rho_codebook(dim, b_nrm).unwrap() };
                let books = CodebookPair { xi: xi_codebook(b_dir).unwrap(), rho };
                let cfg = CodecConfig::new(dim, b_dir, b_nrm).unwrap().with_rounding(Rounding::Full).with_seed(dim as u64);
                let c = OctopusCodec::new(cfg, books.clone()).unwrap();
                for k in gaussian_keys(u64::from(b_dir * 10 + b_nrm), 400, dim) {
                    let ck = c.encode(&k).unwrap();
                    let (_, u) = c.split_and_rotate(&k).unwrap();
                    let mut dir = Vec::new();
                    let mut nrm = Vec::new();
                    for t in c.triplets(&u) {
                        let (i, j, r) = brute_force(t, &books.xi, &books.rho);
                        dir.extend([i as u8, j as u8]);
                        nrm.push(r as u8);
                    }
                    assert_eq!((ck.dir, ck.nrm), (dir, nrm), "dim {dim}, split ({b_dir}, {b_nrm})");
                }
            }
        }
    }
}

// Wire format

fn random_state(cfg: &CodecConfig, stream: &SampleStream, index: u64) -> CompressedKey {
    let n_tri = cfg.n_tri();
    let mut w = vec![0u64; 3 * n_tri + cfg.dim + 2];
    stream.words_at(index, &mut w);
    let gamma = f32::from_bits((w[0] as u32) & 0x7f7f_ffff);
    let dir = (0..2 * n_tri).map(|i| (w[2 + i] % (1u64 << cfg.b_dir)) as u8).collect();
    let nrm = (0..n_tri).map(|i| (w[2 + 2 * n_tri + i] % (1u64 << cfg.b_nrm)) as u8).collect();
    let qjl = cfg.qjl.then(|| {
        let gamma_r = f16::from_bits((w[1] as u16) & 0x7bff);
        let mut signs = vec![0u8; cfg.dim.div_ceil(8)];
        for i in 0..cfg.dim {
            if w[2 + 3 * n_tri + i] & 1 == 1 {
                signs[i / 8] |= 1 << (i % 8);
            }
        }
        QjlSidecar { gamma_r, signs }
    });
    CompressedKey { gamma, dir, nrm, qjl }
}

#[test]
fn pack_unpack_is_identity_on_random_states() {
    let configs = [
        CodecConfig::new(8, 1, 1).unwrap(),
        CodecConfig::new(16, 3, 2).unwrap().with_qjl(5),
        CodecConfig::new(64, 5, 3).unwrap(),
        CodecConfig::new(128, 3, 1).unwrap().with_qjl(9),
        CodecConfig::new(128, 8, 7).unwrap(),
    ];
    let per = 20_000;
    for (ci, cfg) in configs.iter().enumerate() {
        let stream = SampleStream::new(ci as u64, 77);
        let states: Vec<CompressedKey> = (0..per).map(|i| random_state(cfg, &stream, i)).collect();
        let blob = pack_keys(cfg, &states).unwrap();
        let (header, back) = unpack_keys(&blob).unwrap();
        assert!(header.matches(cfg));
        assert_eq!(back, states);
    }
}

#[test]
fn every_single_bit_flip_is_detected_or_changes_the_key() {
    for cfg in [CodecConfig::new(4, 2, 1).unwrap().with_qjl(3), CodecConfig::new(8, 3, 2).unwrap()] {
        let stream = SampleStream::new(1, 78);
        for i in 0..16 {
            let ck = random_state(&cfg, &stream, i);
            let PackedBlob(bytes) = pack(&cfg, &ck).unwrap();
            for bit in 0..bytes.len() * 8 {
                let mut flipped = bytes.clone();
                flipped[bit / 8] ^= 1 << (bit % 8);
                if let Ok(other) = unpack(&cfg, &PackedBlob(flipped)) {
                    assert_ne!(other, ck, "bit {bit} flipped silently");
                }
            }
        }
    }
}

// Attention

#[test]
fn split_k_decode_matches_single_pass() {
    let dim = 64;
    let c = codec(dim, 3, Rounding::Local3x3, 4);
    let keys = gaussian_keys(8, 257, dim);
    let values = SampleStream::new(8, 902).gaussian_matrix(257, 16);
    let cache: Vec<CompressedKey> = keys.iter().map(|k| c.encode(k).unwrap()).collect();
    let q = SampleStream::new(8, 903).gaussian_vec(0, dim);
    let one = attention_decode(&c, &q, &cache, &values, 1).unwrap();
    for splits in [2, 8, 300] {
        let many = attention_decode(&c, &q, &cache, &values, splits).unwrap();
        for (a, b) in one.iter().zip(&many) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}

#[test]
fn single_key_attention_returns_its_value() {
    let c = codec(32, 2, Rounding::Local3x3, 4);
    let ck = c.encode(&gaussian_keys(9, 1, 32)[0]).unwrap();
    let v = vec![1.5, -2.0, 0.25];
    let out = attention_decode(&c, &gaussian_keys(10, 1, 32)[0], &[ck], std::slice::from_ref(&v), 8).unwrap();
    for (a, b) in out.iter().zip(&v) {
        assert!((a - b).abs() <= 1e-12);
    }
}

// Baselines

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn baselines_are_deterministic_and_score_their_decode(
        (dim, k, q) in prop::sample::select(vec![8usize, 64]).prop_flat_map(|d| (Just(d), vec_strategy(d), vec_strategy(d))),
        kind in prop::sample::select(vec![BaselineKind::TqMse, BaselineKind::Polar]),
        bits in 2u8..=4,
        seed in 0u64..1000,
    ) {
        let cfg = BaselineConfig::new(kind, dim, bits).unwrap().with_seeds(seed, seed + 1);
        let a = BaselineCodec::standard(cfg).unwrap();
        let b = BaselineCodec::standard(cfg).unwrap();
        let (sa, sb) = (a.encode(&k).unwrap(), b.encode(&k).unwrap());
        prop_assert_eq!(&sa, &sb);
        let khat = a.decode(&sa).unwrap();
        let s = a.score(&q, &sa).unwrap();
        prop_assert!((s - dot(&q, &khat)).abs() <= 1e-9 * (norm(&q) * norm(&khat)).max(1e-300));
    }
}

#[test]
fn codebook_kind_tags_round_trip() {
    for kind in [CodebookKind::OctCoordinate, CodebookKind::TripletNorm, CodebookKind::RotatedCoordinate, CodebookKind::Custom] {
        assert_eq!(CodebookKind::from_code(kind.code()), Some(kind));
    }
}
