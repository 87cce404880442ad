use fusepeel::threshold::*;
use proptest::prelude::*;

const SLACK: f64 = 1e-15;
const EXTENSIONS: [Extension; 3] = [Extension::Erosion, Extension::Consolidation, Extension::Asymptotic];

fn window() -> impl Strategy<Value = ProbWindow> {
    (2usize..24).prop_flat_map(|d| {
        (prop::collection::vec(0.0f64..=1.0, 2 * d + 1), 0.0f64..=1.0, 0.0f64..=1.0)
            .prop_map(move |(v, l, r)| ProbWindow::new(d, v, l, r).unwrap())
    })
}

fn monotone_window() -> impl Strategy<Value = ProbWindow> {
    (2usize..24).prop_flat_map(|d| {
        prop::collection::vec(0.0f64..=1.0, 2 * d + 3).prop_map(move |mut v| {
            v.sort_by(f64::total_cmp);
            let right = v.pop().unwrap();
            let left = v.remove(0);
            ProbWindow::new(d, v, left, right).unwrap()
        })
    })
}

fn kc() -> impl Strategy<Value = (usize, f64)> {
    (3usize..=7, 0.05f64..3.0)
}

/// `P̂q` on all of ℤ, computed on a window wide enough that everything
/// outside it is the image of a constant tail.
fn exact_phat(q: &ProbWindow, k: usize, c: f64) -> ProbWindow {
    let wide = ProbWindow::from_fn(q.half_width() + k, q.left(), q.right(), |i| q.get(i));
    apply_phat(&wide, k, c, Extension::Asymptotic)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn p_is_bounded_by_phat(
        (k, c) in kc(),
        ell in 1usize..40,
        seed in any::<u64>(),
    ) {
        let segments = ell + k - 1;
        let mut rng = fusepeel::rng::stream(seed, 0);
        let q: Vec<f64> = (0..segments).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let p = apply_p(&q, k, c, ell);
        let w = ProbWindow::from_fn(segments + k, 0.0, 0.0, |i| {
            usize::try_from(i).ok().and_then(|i| q.get(i)).copied().unwrap_or(0.0)
        });
        let phat = apply_phat(&w, k, c, Extension::Asymptotic);
        for (i, &pi) in p.iter().enumerate() {
            prop_assert!(pi <= phat.get(i as i64) + SLACK, "i={i}: {pi} > {}", phat.get(i as i64));
        }
    }

    #[test]
    fn phat_commutes_with_shifts(q in window(), (k, c) in kc(), s in -6i64..=6) {
        let d = q.half_width() as i64;
        let reach = k as i64 - 1;
        for ext in EXTENSIONS {
            let a = apply_phat(&q.shifted(s), k, c, ext);
            let b = apply_phat(&q, k, c, ext);
            for i in -d..=d {
                let inside = |x: i64| x - reach >= -d && x + reach <= d;
                if inside(i) && inside(i - s) {
                    prop_assert_eq!(a.get(i).to_bits(), b.get(i - s).to_bits(), "i={} s={}", i, s);
                }
            }
        }
    }

    #[test]
    fn phat_is_monotone_in_its_argument(
        q in window(),
        (k, c) in kc(),
        bumps in prop::collection::vec(0.0f64..0.5, 64),
    ) {
        let d = q.half_width() as i64;
        let bump = |i: i64| bumps[(i + d) as usize % bumps.len()];
        let larger = ProbWindow::from_fn(
            q.half_width(),
            (q.left() + bumps[0]).min(1.0),
            (q.right() + bumps[1]).min(1.0),
            |i| (q.get(i) + bump(i)).min(1.0),
        );
        prop_assert!(q.le(&larger, 0.0));
        for ext in EXTENSIONS {
            prop_assert!(apply_phat(&q, k, c, ext).le(&apply_phat(&larger, k, c, ext), SLACK));
        }
        prop_assert!(exact_phat(&q, k, c).le(&exact_phat(&larger, k, c), SLACK));
    }

    #[test]
    fn phat_preserves_monotonicity(q in monotone_window(), (k, c) in kc()) {
        prop_assert!(q.is_nondecreasing());
        for ext in EXTENSIONS {
            prop_assert!(apply_phat(&q, k, c, ext).is_nondecreasing());
        }
        prop_assert!(exact_phat(&q, k, c).is_nondecreasing());
    }

    #[test]
    fn phat_is_local(q in window(), (k, c) in kc(), at in any::<prop::sample::Index>(), x in 0.0f64..=1.0) {
        let d = q.half_width() as i64;
        let i = at.index(2 * d as usize + 1) as i64 - d;
        let reach = k as i64 - 1;
        let base = apply_phat(&q, k, c, Extension::Asymptotic).get(i);
        for far in -d..=d {
            if (far - i).abs() <= reach {
                continue;
            }
            let changed = ProbWindow::from_fn(q.half_width(), q.left(), q.right(), |j| {
                if j == far { x } else { q.get(j) }
            });
            let after = apply_phat(&changed, k, c, Extension::Asymptotic).get(i);
            prop_assert_eq!(base.to_bits(), after.to_bits(), "i={} far={}", i, far);
        }
    }
}

/// Densities between just above the tangency point and 1.2.
fn above_tangency() -> impl Strategy<Value = (usize, f64)> {
    (3usize..=7, -4.0f64..0.3).prop_map(|(k, e)| (k, tangency_density(k) + 10f64.powf(e)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn erosion_windows_are_upper_bounds(
        (k, c) in above_tangency(),
        d in 4usize..30,
        rounds in 1usize..120,
    ) {
        let fp = fixed_points(k, c).unwrap();
        let mut a = ProbWindow::step(d, fp.xi1 / 2.0, 1.0);
        let mut exact = ProbWindow::from_fn(d + (k - 1) * rounds + k, fp.xi1 / 2.0, 1.0, |i| a.get(i));
        for r in 0..rounds {
            let next = apply_phat(&a, k, c, Extension::Erosion);
            // One step of the recurrence dominates P̂ of the previous window...
            prop_assert!(exact_phat(&a, k, c).le(&next, SLACK), "r={r}");
            a = next;
            exact = apply_phat(&exact, k, c, Extension::Asymptotic);
            // ...so the windows dominate the true iterates.
            prop_assert!(exact.le(&a, 1e-12), "r={r}");
            prop_assert!(a.is_nondecreasing());
        }
    }

    #[test]
    fn consolidation_windows_are_lower_bounds(
        (k, c) in above_tangency(),
        d in 4usize..30,
        rounds in 1usize..120,
    ) {
        let fp = fixed_points(k, c).unwrap();
        let mid = (fp.xi1 + fp.xi2) / 2.0;
        let mut b = ProbWindow::step(d, 0.0, mid);
        let mut exact = ProbWindow::from_fn(d + (k - 1) * rounds + k, 0.0, mid, |i| b.get(i));
        for r in 0..rounds {
            let next = apply_phat(&b, k, c, Extension::Consolidation);
            prop_assert!(next.le(&exact_phat(&b, k, c), SLACK), "r={r}");
            b = next;
            exact = apply_phat(&exact, k, c, Extension::Asymptotic);
            prop_assert!(b.le(&exact, 1e-12), "r={r}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn derivative_matches_central_difference(x in 0.001f64..0.999, k in 3usize..=7, c in 0.05f64..3.0) {
        let h = 1e-6;
        let fd = (f_eval(x + h, k, c) - f_eval(x - h, k, c)) / (2.0 * h);
        prop_assert!((fd - f_deriv(x, k, c)).abs() <= 1e-6, "fd={} f'={}", fd, f_deriv(x, k, c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn fixed_points_above_tangency((k, c) in above_tangency()) {
        let fp = fixed_points(k, c).unwrap();
        prop_assert!(0.0 < fp.xi1 && fp.xi1 < fp.xi2 && fp.xi2 < 1.0);
        prop_assert!((f_eval(fp.xi1, k, c) - fp.xi1).abs() <= 1e-12);
        prop_assert!((f_eval(fp.xi2, k, c) - fp.xi2).abs() <= 1e-12);
        prop_assert!(f_deriv(fp.xi1, k, c) > 1.0, "f'(xi1)={}", f_deriv(fp.xi1, k, c));
        prop_assert!(f_deriv(fp.xi2, k, c) < 1.0, "f'(xi2)={}", f_deriv(fp.xi2, k, c));
    }

    #[test]
    fn no_fixed_points_below_tangency(k in 3usize..=7, frac in 0.01f64..0.999) {
        prop_assert!(fixed_points(k, frac * tangency_density(k)).is_none());
    }

    #[test]
    fn f_iteration_limits(k in 3usize..=7, e in -1.7f64..0.3, u in 0.0f64..1.0) {
        let c = tangency_density(k) + 10f64.powf(e);
        let fp = fixed_points(k, c).unwrap();
        let iterate = |mut x: f64, target: f64| {
            for _ in 0..1_000_000 {
                if (x - target).abs() <= 1e-9 {
                    return true;
                }
                x = f_eval(x, k, c);
            }
            false
        };
        prop_assert!(iterate(u * 0.999 * fp.xi1, 0.0));
        let above = fp.xi1 * 1.001 + u * (1.0 - fp.xi1 * 1.001);
        prop_assert!(iterate(above, fp.xi2));
    }
}

#[test]
fn tangency_for_three_is_near_reference_value() {
    let c = tangency_density(3);
    assert!((c - reference::ER_CORE_3).abs() < 5e-4, "{c}");
    assert!(fixed_points(3, c - 1e-6).is_none());
    assert!(fixed_points(3, c + 1e-6).is_some());
}

#[test]
fn constant_windows_map_to_constant_windows() {
    let w = apply_phat(&ProbWindow::constant(10, 0.5), 3, 0.9, Extension::Asymptotic);
    let want = f_eval(0.5, 3, 0.9);
    for i in -12..=12 {
        assert_eq!(w.get(i), want);
    }
    let z = apply_phat(&ProbWindow::constant(10, 0.0), 4, 1.3, Extension::Asymptotic);
    assert!((-12..=12).all(|i| z.get(i) == 0.0));
}
