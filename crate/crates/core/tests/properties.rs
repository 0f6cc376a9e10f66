use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use spu_core::composite::intra_frame_normalize;
use spu_core::evaluation::{align_relative, detect_failure, metrics_from_confusion, FailureMode};
use spu_core::formats::{
    decode_fpm, decode_labelmap, decode_orders, encode_fpm, encode_labelmap, encode_orders,
};
use spu_core::labeling::make_labels;
use spu_core::masking::{connected_components_4, remove_small_regions};
use spu_core::phase_decode::{
    decode_background, decode_modulation, decode_wrapped, synthesize_fringes, wrap,
};
use spu_core::unwrap_spatial::{unwrap_with, Method};
use spu_core::unwrap_temporal::{gray_decode, gray_encode};
use spu_core::{Class, FloatMap, LabelMap, Mask, OrderMap};

fn circ(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn map_strategy(w: usize, h: usize, lo: f64, hi: f64) -> impl Strategy<Value = FloatMap<f64>> {
    prop::collection::vec(lo..hi, w * h).prop_map(move |v| FloatMap::new(w, h, v).unwrap())
}

fn mask_strategy(w: usize, h: usize) -> impl Strategy<Value = Mask> {
    prop::collection::vec(prop::bool::weighted(0.7), w * h)
        .prop_map(move |v| Mask::new(w, h, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decode_inverts_synthesis(
        n in 3usize..=16,
        phi in map_strategy(6, 5, -40.0, 40.0),
        bg in map_strategy(6, 5, 10.0, 200.0),
        md in map_strategy(6, 5, 0.5, 80.0),
    ) {
        let stack = synthesize_fringes(&phi, &bg, &md, n).unwrap();
        let (p, b, m) = (decode_wrapped(&stack), decode_background(&stack), decode_modulation(&stack));
        for i in 0..30 {
            prop_assert!(circ(p.at(i), phi.at(i)) < 1e-9);
            prop_assert!(p.at(i) > -PI && p.at(i) <= PI);
            prop_assert!((b.at(i) - bg.at(i)).abs() <= 1e-9 * bg.at(i));
            prop_assert!((m.at(i) - md.at(i)).abs() <= 1e-9 * md.at(i));
        }
    }

    #[test]
    fn decoded_phase_ignores_offset_and_gain(
        n in 3usize..=8,
        phi in map_strategy(4, 4, -10.0, 10.0),
        offset in -50.0f64..50.0,
        gain in 0.1f64..10.0,
    ) {
        let bg = FloatMap::filled(4, 4, 100.0);
        let md = FloatMap::filled(4, 4, 30.0);
        let stack = synthesize_fringes(&phi, &bg, &md, n).unwrap();
        let moved = stack.map_frames(|f| f.map(|v| gain * v + offset)).unwrap();
        let (a, b) = (decode_wrapped(&stack), decode_wrapped(&moved));
        let (ma, mb) = (decode_modulation(&stack), decode_modulation(&moved));
        for i in 0..16 {
            prop_assert!(circ(a.at(i), b.at(i)) < 1e-9);
            prop_assert!((mb.at(i) - gain * ma.at(i)).abs() < 1e-9 * mb.at(i).max(1.0));
        }
    }

    #[test]
    fn wrap_is_idempotent(x in -1e4f64..1e4) {
        let r = wrap(x).unwrap();
        prop_assert!(r > -PI && r <= PI);
        prop_assert_eq!(wrap(r).unwrap(), r);
        let turns = (x - r) / TAU;
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn normalization_orders_and_scales(m in map_strategy(8, 8, 0.1, 500.0), s in 0.01f64..1000.0) {
        let (a, rep) = intra_frame_normalize(&m).unwrap();
        let (b, _) = intra_frame_normalize(&m.map(|v| v * s)).unwrap();
        prop_assert_eq!(rep.removed_count, 1);
        for i in 0..64 {
            prop_assert!(a.at(i) > 0.0 && a.at(i) <= 1.0);
            prop_assert!((a.at(i) - b.at(i)).abs() < 1e-12);
            for j in 0..64 {
                if m.at(i) <= m.at(j) {
                    prop_assert!(a.at(i) <= a.at(j));
                }
            }
        }
    }

    #[test]
    fn small_region_removal_is_idempotent(mask in mask_strategy(12, 9), frac in 0.0f64..0.2) {
        let once = remove_small_regions(&mask, frac);
        prop_assert!(once.is_subset_of(&mask));
        prop_assert_eq!(remove_small_regions(&once, frac), once);
    }

    #[test]
    fn unwrapped_phase_is_congruent(
        phi in map_strategy(9, 7, -PI + 1e-9, PI),
        mask in mask_strategy(9, 7),
        quality in map_strategy(9, 7, 0.0, 1.0),
    ) {
        for method in Method::ALL {
            let r = unwrap_with(method, &phi, &mask, &quality).unwrap();
            for i in 0..phi.len() {
                if !mask.at(i) {
                    prop_assert!(!r.phase.is_valid(i));
                    continue;
                }
                let k = (r.phase.at(i) - phi.at(i)) / TAU;
                prop_assert!((k - k.round()).abs() < 1e-9);
                prop_assert_eq!(k.round() as i32, r.orders.at(i));
            }
            prop_assert_eq!(r.seeds.len(), r.regions.region_count());
        }
    }

    #[test]
    fn smooth_phase_unwraps_exactly(
        slope_r in -2.5f64..2.5,
        slope_c in -2.5f64..2.5,
        shift in -20i32..20,
    ) {
        let truth = FloatMap::from_fn(11, 8, |r, c| slope_r * r as f64 + slope_c * c as f64);
        let phi = truth.map(|v| wrap(v).unwrap());
        let mask = Mask::filled(11, 8, true);
        for method in Method::ALL {
            let r = unwrap_with(method, &phi, &mask, &phi.map(|_| 1.0)).unwrap();
            let gt = truth.map(|v| v + TAU * shift as f64);
            let a = align_relative(&r.phase, &gt, &r.regions).unwrap();
            for i in 0..phi.len() {
                prop_assert!((a.phase.at(i) - gt.at(i)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn alignment_is_idempotent(
        rel in map_strategy(6, 6, -30.0, 30.0),
        gt in map_strategy(6, 6, -30.0, 30.0),
        mask in mask_strategy(6, 6),
    ) {
        let regions = connected_components_4(&mask);
        let once = align_relative(&rel, &gt, &regions).unwrap();
        let twice = align_relative(&once.phase, &gt, &regions).unwrap();
        for i in 0..36 {
            prop_assert!((once.phase.at(i) - twice.phase.at(i)).abs() < 1e-9);
        }
        for o in twice.offsets.iter().flatten() {
            prop_assert_eq!(*o, 0);
        }
    }

    #[test]
    fn failure_is_monotone_in_threshold(
        errors in mask_strategy(10, 10),
        a in 0.001f64..0.5,
        b in 0.001f64..0.5,
    ) {
        let gt = FloatMap::filled(10, 10, 0.0);
        let phi = FloatMap::from_fn(10, 10, |r, c| if errors.get(r, c) { TAU } else { 0.0 });
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let f_lo = detect_failure(&phi, &gt, lo, FailureMode::Order).unwrap();
        let f_hi = detect_failure(&phi, &gt, hi, FailureMode::Order).unwrap();
        prop_assert!(f_lo.is_failure >= f_hi.is_failure);
        prop_assert_eq!(f_lo.error_points(), errors.count());
    }

    #[test]
    fn fwiou_never_exceeds_pa(cells in prop::array::uniform9(0u64..50)) {
        let confusion = [
            [cells[0], cells[1], cells[2]],
            [cells[3], cells[4], cells[5]],
            [cells[6], cells[7], cells[8]],
        ];
        prop_assume!(cells.iter().sum::<u64>() > 0);
        let m = metrics_from_confusion(confusion);
        prop_assert!(m.fwiou <= m.pa + 1e-12);
        prop_assert!(m.miou <= m.mpa + 1e-12);
        for v in [m.pa, m.mpa, m.miou, m.fwiou] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn fpm_round_trip(v in prop::collection::vec(-1e30f32..1e30, 1..40), w in 1usize..5) {
        let h = v.len() / w;
        prop_assume!(h > 0);
        let data: Vec<f32> = v[..w * h].to_vec();
        let m = FloatMap::new(w, h, data.clone()).unwrap();
        let back: FloatMap<f32> = decode_fpm(&encode_fpm(&m).unwrap()).unwrap();
        for (a, b) in back.data().iter().zip(&data) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        let wide: FloatMap<f64> = decode_fpm(&encode_fpm(&m).unwrap()).unwrap();
        prop_assert_eq!(encode_fpm(&wide).unwrap(), encode_fpm(&m).unwrap());
    }

    #[test]
    fn label_and_order_round_trip(raw in prop::collection::vec(0u8..3, 12), k in prop::collection::vec(-3000i32..3000, 12)) {
        let labels = LabelMap::from_raw(4, 3, &raw).unwrap();
        prop_assert_eq!(decode_labelmap(&encode_labelmap(&labels)).unwrap(), labels.clone());
        let validity = Mask::new(4, 3, raw.iter().map(|&r| r != 0).collect()).unwrap();
        let k: Vec<i32> = k.iter().zip(&raw).map(|(&k, &r)| if r != 0 { k } else { 0 }).collect();
        let orders = OrderMap::new(4, 3, k, validity).unwrap();
        prop_assert_eq!(decode_orders(&encode_orders(&orders).unwrap()).unwrap(), orders);
    }

    #[test]
    fn labels_partition_and_threshold_monotone(
        m in map_strategy(8, 8, 0.0, 6.0),
        d in map_strategy(8, 8, 0.0, 1.0),
        nonzero in mask_strategy(8, 8),
        t1 in 0.0f64..6.0,
        t2 in 0.0f64..6.0,
    ) {
        let depth = FloatMap::from_fn(8, 8, |r, c| if nonzero.get(r, c) { d.get(r, c) + 1.0 } else { 0.0 });
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let a = make_labels(&m, &depth, lo).unwrap();
        let b = make_labels(&m, &depth, hi).unwrap();
        let total: usize = Class::ALL.iter().map(|&c| a.count(c)).sum();
        prop_assert_eq!(total, 64);
        prop_assert!(a.count(Class::Background) <= b.count(Class::Background));
    }

    #[test]
    fn gray_code_is_a_bijection(i in 0u32..1_000_000) {
        prop_assert_eq!(gray_decode(gray_encode(i)), i);
        prop_assert_eq!((gray_encode(i) ^ gray_encode(i + 1)).count_ones(), 1);
    }
}
