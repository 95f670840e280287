//! Randomized invariant checks. Everything here is solver-free and cheap per
//! case, so the generators range over shapes as well as values.
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sake_pks::fft::{fft2c, ifft2c};
use sake_pks::hankel::{hankel_adjoint_avg, hankel_forward, lowrank_project, singular_values, HankelConfig};
use sake_pks::kspace::{apply_mask, rss_combine, ComplexImage, KSpaceVolume, SamplingMask};
use sake_pks::masks::{generate, DensityProfile, MaskFamily, MaskSpec};
use sake_pks::metrics::{psnr, ssim, PSNR_CAP_DB};
use sake_pks::pks::{concat_blocks, decompose, pks_inverse_transform, pks_transform, ContrastSet, PartitionAxis, PartitionSpec};
use sake_pks::raw::{decode_raw, encode_raw};

fn cvol(nc: usize, rows: usize, cols: usize, seed: u64) -> KSpaceVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    KSpaceVolume::new(Array3::from_shape_fn((nc, rows, cols), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }))
    .unwrap()
}

fn cmat(rows: usize, cols: usize, seed: u64) -> Array2<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn bernoulli_mask(rows: usize, cols: usize, keep: f64, seed: u64) -> SamplingMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ind = Array2::<u8>::zeros((rows, cols));
    for v in ind.iter_mut() {
        *v = u8::from(rng.gen_bool(keep));
    }
    // At least one sample so the mask is usable.
    ind[[rows / 2, cols / 2]] = 1;
    SamplingMask::new(ind, 1.0 / keep, seed).unwrap()
}

fn frob2(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn bits_eq(a: &KSpaceVolume, b: &KSpaceVolume) -> bool {
    a.data().dim() == b.data().dim()
        && a.data()
            .iter()
            .zip(b.data().iter())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
}

proptest! {
    #[test]
    fn fft_is_unitary_and_invertible(
        rows in 4usize..24,
        cols in 4usize..24,
        seed in any::<u64>(),
    ) {
        let x = cmat(rows, cols, seed);
        let fx = fft2c(&x.view()).unwrap();
        let nx = frob2(&x);
        prop_assert!((frob2(fx.data()) - nx).abs() <= 1e-10 * nx.max(1e-30));
        let back = ifft2c(&fx.data().view()).unwrap();
        prop_assert!(frob2(&(back.data() - &x)) <= 1e-10 * nx.max(1e-30));
    }

    #[test]
    fn masking_is_idempotent_and_zeroes_holes(
        nc in 1usize..4,
        rows in 8usize..20,
        cols in 8usize..20,
        keep in 0.2f64..0.9,
        seed in any::<u64>(),
    ) {
        let v = cvol(nc, rows, cols, seed);
        let m = bernoulli_mask(rows, cols, keep, seed.wrapping_add(1));
        let once = apply_mask(&v, &m).unwrap();
        let twice = apply_mask(&once, &m).unwrap();
        prop_assert!(bits_eq(&once, &twice));
        for c in 0..nc {
            for r in 0..rows {
                for j in 0..cols {
                    if !m.is_sampled(r, j) {
                        prop_assert_eq!(once.data()[[c, r, j]], Complex64::new(0.0, 0.0));
                    } else {
                        prop_assert_eq!(once.data()[[c, r, j]], v.data()[[c, r, j]]);
                    }
                }
            }
        }
    }

    #[test]
    fn hankel_lift_roundtrips(
        nc in 1usize..4,
        rows in 8usize..18,
        cols in 8usize..18,
        wr in 2usize..5,
        wc in 2usize..5,
        seed in any::<u64>(),
    ) {
        let v = cvol(nc, rows, cols, seed);
        let cfg = HankelConfig::new(wr, wc, 1).unwrap();
        let mat = hankel_forward(&v, &cfg).unwrap();
        let rt = hankel_adjoint_avg(&mat, (&v).into(), &cfg).unwrap();
        let num = (rt.data() - v.data()).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(num <= 1e-12 * v.frob_norm());
    }

    #[test]
    fn truncation_caps_rank_and_energy(
        nc in 1usize..4,
        rows in 8usize..14,
        cols in 8usize..14,
        k in 1usize..10,
        seed in any::<u64>(),
    ) {
        let v = cvol(nc, rows, cols, seed);
        let cfg = HankelConfig::new(3, 3, 1).unwrap();
        let mat = hankel_forward(&v, &cfg).unwrap();
        let proj = lowrank_project(&mat, k).unwrap();
        let sv_in = singular_values(&mat).unwrap();
        let sv_out = singular_values(&proj).unwrap();
        prop_assert!(frob2(proj.values()) <= frob2(mat.values()) * (1.0 + 1e-12));
        for (i, s) in sv_out.iter().enumerate().skip(k) {
            prop_assert!(*s <= 1e-9 * sv_in[0], "sigma_{} = {} after rank-{} cut", i, s, k);
        }
        // Projection is idempotent up to numerics.
        let again = lowrank_project(&proj, k).unwrap();
        let drift = frob2(&(again.values() - proj.values()));
        prop_assert!(drift <= 1e-9 * frob2(mat.values()).max(1e-30));
    }

    #[test]
    fn partition_blocks_reassemble(
        nc in 1usize..4,
        rows in 8usize..24,
        cols in 8usize..24,
        p in 2usize..5,
        row_axis in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let v = cvol(nc, rows, cols, seed);
        let axis = if row_axis { PartitionAxis::Row } else { PartitionAxis::Column };
        let extent = if row_axis { rows } else { cols };
        prop_assume!(extent >= p);
        let spec = PartitionSpec::equal(axis, p, extent, 0).unwrap();
        let blocks = decompose(&v, &spec).unwrap();
        prop_assert_eq!(blocks.len(), p);
        let back = concat_blocks(&blocks, axis).unwrap();
        prop_assert!(bits_eq(&back, &v));
    }

    #[test]
    fn synthesis_roundtrip_preserves_target(
        nc in 1usize..3,
        rows in 10usize..24,
        cols in 10usize..24,
        p in 2usize..5,
        keep in 0.3f64..0.8,
        seed in any::<u64>(),
    ) {
        prop_assume!(rows >= p);
        let mask = bernoulli_mask(rows, cols, keep, seed);
        let target = apply_mask(&cvol(nc, rows, cols, seed.wrapping_add(1)), &mask).unwrap();
        let aux = cvol(nc, rows, cols, seed.wrapping_add(2));
        let cs = ContrastSet::new(target.clone(), mask, vec![("aux".into(), aux)]).unwrap();
        let spec = PartitionSpec::equal(PartitionAxis::Row, p, rows, 0).unwrap();
        let hybrids = pks_transform(&cs, &spec).unwrap();
        let vols: Vec<KSpaceVolume> = hybrids.iter().map(|h| h.volume.clone()).collect();
        let out = pks_inverse_transform(&vols, &spec).unwrap();
        prop_assert!(bits_eq(&out, &target));
    }

    #[test]
    fn rss_is_nonnegative_and_zero_only_when_all_coils_are(
        nc in 1usize..5,
        rows in 8usize..16,
        cols in 8usize..16,
        seed in any::<u64>(),
    ) {
        let coils: Vec<ComplexImage> = (0..nc)
            .map(|i| ComplexImage::new(cmat(rows, cols, seed.wrapping_add(i as u64))).unwrap())
            .collect();
        let rss = rss_combine(&coils).unwrap();
        for ((r, c), v) in rss.indexed_iter() {
            prop_assert!(*v >= 0.0);
            let all = (0..nc).map(|i| coils[i].data()[[r, c]].norm_sqr()).sum::<f64>().sqrt();
            prop_assert!((v - all).abs() <= 1e-12 * all.max(1e-30));
        }
    }

    #[test]
    fn any_valid_spec_generates_deterministically(
        fam in 0usize..3,
        r in 1.5f64..6.0,
        rows in 8usize..40,
        cols in 8usize..40,
        seed in any::<u64>(),
        power in 0.5f64..4.0,
    ) {
        let family = [MaskFamily::Random2D, MaskFamily::Cartesian1D, MaskFamily::Poisson2D][fam];
        let spec = MaskSpec::new(
            family, r, rows, cols, seed,
            DensityProfile::VariableDensity { power },
        ).unwrap();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        prop_assert_eq!(a.indicator(), b.indicator());
        prop_assert!(a.ones_count() > 0);
        prop_assert!(a.sampled_fraction() <= 1.0);
        if family == MaskFamily::Cartesian1D {
            let expect = (rows as f64 / r).round().max(1.0) as usize;
            let mut full = 0usize;
            for i in 0..rows {
                let s: usize = (0..cols).map(|j| a.indicator()[[i, j]] as usize).sum();
                prop_assert!(s == 0 || s == cols);
                full += usize::from(s == cols);
            }
            prop_assert_eq!(full, expect);
        }
    }

    #[test]
    fn raw_bytes_roundtrip_bit_exactly(
        nc in 1usize..4,
        rows in 1usize..12,
        cols in 1usize..12,
        seed in any::<u64>(),
        label in "[a-z][a-z0-9_]{0,12}",
        value in "[ -<>-~]{0,20}",
    ) {
        prop_assume!(!["rows", "cols", "coils"].contains(&label.as_str()));
        // f32 payload on disk: feed values that survive the narrowing.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vol = KSpaceVolume::new(Array3::from_shape_fn((nc, rows, cols), |_| {
            Complex64::new((rng.gen::<f32>() - 0.5) as f64, (rng.gen::<f32>() - 0.5) as f64)
        })).unwrap();
        let meta = vec![(label, value)];
        let bytes = encode_raw(&vol, &meta).unwrap();
        let (back, header) = decode_raw(&bytes).unwrap();
        prop_assert!(bits_eq(&back, &vol));
        prop_assert_eq!(&header.meta, &meta);
        let bytes2 = encode_raw(&back, &header.meta).unwrap();
        prop_assert_eq!(bytes, bytes2);
    }

    #[test]
    fn metric_bounds_and_noise_ordering(
        rows in 12usize..32,
        cols in 12usize..32,
        seed in any::<u64>(),
        scale in 2.0f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(0.1..1.0));
        prop_assert_eq!(psnr(&truth, &truth).unwrap(), PSNR_CAP_DB);
        prop_assert_eq!(ssim(&truth, &truth).unwrap(), 1.0);

        let noise = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-0.05..0.05f64));
        let near = &truth + &noise;
        let far = &truth + &noise.mapv(|v| v * scale);
        let p_near = psnr(&near, &truth).unwrap();
        let p_far = psnr(&far, &truth).unwrap();
        prop_assert!(p_near > p_far, "psnr {} !> {}", p_near, p_far);
        for s in [ssim(&near, &truth).unwrap(), ssim(&far, &truth).unwrap()] {
            prop_assert!((-1.0..=1.0).contains(&s));
        }
        // Scaling both images together changes nothing.
        let t2 = truth.mapv(|v| v * 3.25);
        let n2 = near.mapv(|v| v * 3.25);
        prop_assert!((psnr(&n2, &t2).unwrap() - p_near).abs() <= 1e-9);
    }
}
