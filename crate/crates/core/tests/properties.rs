use cornerflow::field::{BidiskGrid, MapField2};
use cornerflow::fit::power_law_fit;
use cornerflow::geom::{self, HalfSpaceChart};
use cornerflow::grid::DiskGrid;
use cornerflow::snapshot::GridSnapshot;
use proptest::prelude::*;

fn ball_point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-1.0f64..1.0, dim), 0.0f64..0.95).prop_filter_map("nonzero direction", |(v, r)| {
        let n = geom::norm_sq(&v).sqrt();
        (n > 1e-3).then(|| v.iter().map(|x| x * r / n).collect())
    })
}

proptest! {
    #[test]
    fn halfspace_distance_matches_ball_distance(a in ball_point(3), b in ball_point(3), pole in ball_point(3)) {
        let n = geom::norm_sq(&pole).sqrt();
        prop_assume!(n > 0.1);
        let pole: Vec<f64> = pole.iter().map(|x| x / n).collect();
        let chart = HalfSpaceChart::new(&pole).unwrap();
        let (ca, cb) = (chart.to_chart(&a).unwrap(), chart.to_chart(&b).unwrap());
        let d_ball = geom::hyperbolic_distance(&a, &b).unwrap();
        let d_chart = geom::halfspace_distance(&ca, &cb).unwrap();
        prop_assert!((d_ball - d_chart).abs() <= 1e-9 * (1.0 + d_ball));
        let back = chart.from_chart(&ca).unwrap();
        for (x, y) in back.iter().zip(&a) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mobius_translation_preserves_distance(a in ball_point(4), x in ball_point(4), y in ball_point(4)) {
        let d0 = geom::hyperbolic_distance(&x, &y).unwrap();
        let d1 = geom::hyperbolic_distance(&geom::mobius_translate(&a, &x), &geom::mobius_translate(&a, &y)).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-8 * (1.0 + d0));
    }

    #[test]
    fn cayley_chart_round_trips(z in ball_point(2), anchor in 0.0f64..std::f64::consts::TAU) {
        let h = geom::disk_to_halfplane([z[0], z[1]], anchor).unwrap();
        prop_assert!(h[0] > 0.0);
        let back = geom::halfplane_to_disk(h, anchor);
        prop_assert!((back[0] - z[0]).abs() < 1e-12 && (back[1] - z[1]).abs() < 1e-12);
    }

    #[test]
    fn snapshots_round_trip_any_values(seed in any::<u64>(), nr in 5usize..8, half in 3usize..5) {
        let g = DiskGrid::new(nr, 2 * half, 0.5).unwrap();
        let mut f = MapField2::zeros(BidiskGrid::square(g), 2).unwrap();
        let mut s = seed;
        for v in f.values.iter_mut() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = f64::from_bits(s >> 2);
        }
        let bytes = GridSnapshot::from_bidisk(&f).to_bytes().unwrap();
        let back = GridSnapshot::from_bytes(&bytes, std::path::Path::new("p")).unwrap();
        prop_assert_eq!(
            back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn power_law_exponents_are_recovered(a1 in 0.1f64..3.0, a2 in 0.1f64..3.0, c in 0.01f64..100.0) {
        let mut s = Vec::new();
        for i in 1..=11 {
            for j in 1..=11 {
                let (r1, r2) = (0.7f64.powi(i), 0.55f64.powi(j));
                s.push((r1, r2, c * r1.powf(a1) * r2.powf(a2)));
            }
        }
        let f = power_law_fit(&s, 0.0).unwrap();
        prop_assert!((f.exponents[0] - a1).abs() < 1e-9 && (f.exponents[1] - a2).abs() < 1e-9);
        prop_assert!((f.constant / c - 1.0).abs() < 1e-9);
    }
}
