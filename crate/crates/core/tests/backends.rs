use hawkes_core::likelihood::{self, compensator, excitation_states, intensities, log_likelihood};
use hawkes_core::model::validate_sequence;
use hawkes_core::{Backend, EventSequence, Executor, HawkesParams, Serial};
use proptest::prelude::*;

/// Splits the work over scoped std threads, in fixed chunks.
struct Threads(usize);

impl Executor for Threads {
    fn for_each<T: Send, F: Fn(&mut T) + Sync + Send>(&self, items: &mut [T], f: F) {
        let chunk = items.len().div_ceil(self.0).max(1);
        std::thread::scope(|s| {
            for part in items.chunks_mut(chunk) {
                let f = &f;
                s.spawn(move || part.iter_mut().for_each(f));
            }
        });
    }

    fn workers(&self) -> usize {
        self.0
    }
}

fn instance() -> impl Strategy<Value = (EventSequence, HawkesParams)> {
    (1usize..=8, 1usize..=3, 1usize..=300).prop_flat_map(|(m, kk, n)| {
        (
            proptest::collection::vec((0.0f64..0.3, 0usize..m, proptest::bool::weighted(0.1)), n),
            proptest::collection::vec(0.01f64..1.0, m),
            proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..0.3], kk * m * m),
            proptest::collection::vec(0.05f64..5.0, kk),
        )
            .prop_map(move |(steps, mu, alpha, gamma)| {
                let mut t = 0.0;
                let mut times = Vec::with_capacity(n);
                let mut marks = Vec::with_capacity(n);
                for (dt, mark, tie) in steps {
                    if !tie {
                        t += dt;
                    }
                    times.push(t);
                    marks.push(mark);
                }
                let seq = validate_sequence(times, marks, t + 0.5, m).unwrap();
                (seq, HawkesParams::new(mu, alpha, gamma).unwrap())
            })
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backends_agree((seq, params) in instance()) {
        let reference = excitation_states(&seq, &params, Backend::Naive, &Serial).unwrap();
        let lam_ref = intensities(&reference, &seq, &params, true);
        let ll_ref = log_likelihood(&seq, &params, Backend::Naive, &Serial).unwrap();
        for backend in [Backend::Sequential, Backend::Scan] {
            let st = excitation_states(&seq, &params, backend, &Serial).unwrap();
            let lam = intensities(&st, &seq, &params, true);
            for (a, b) in lam_ref.at_event.iter().zip(&lam.at_event) {
                prop_assert!(rel_close(*a, *b, 1e-9), "{backend}: {a} vs {b}");
            }
            for (a, b) in lam_ref.all_nodes.as_ref().unwrap().iter().zip(lam.all_nodes.as_ref().unwrap()) {
                prop_assert!(rel_close(*a, *b, 1e-9));
            }
            let ll = log_likelihood(&seq, &params, backend, &Serial).unwrap();
            prop_assert!(rel_close(ll_ref, ll, 1e-9), "{backend}: {ll_ref} vs {ll}");
        }
    }

    #[test]
    fn scan_is_bitwise_independent_of_workers((seq, params) in instance()) {
        let one = excitation_states(&seq, &params, Backend::Scan, &Serial).unwrap();
        let many = excitation_states(&seq, &params, Backend::Scan, &Threads(4)).unwrap();
        prop_assert_eq!(one.values, many.values);
        let a = log_likelihood(&seq, &params, Backend::Scan, &Serial).unwrap();
        let b = log_likelihood(&seq, &params, Backend::Scan, &Threads(3)).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}

/// λ_p(t) by direct summation over events strictly before `t`.
fn intensity_at(seq: &EventSequence, params: &HawkesParams, p: usize, t: f64) -> f64 {
    let mut l = params.mu()[p];
    for (&tj, &q) in seq.times().iter().zip(seq.marks()) {
        if tj >= t {
            break;
        }
        for (k, g) in params.gamma().iter().enumerate() {
            l += g * params.alpha_at(k, p, q) * (-g * (t - tj)).exp();
        }
    }
    l
}

#[test]
fn compensator_matches_quadrature() {
    let seq = validate_sequence(vec![0.2, 0.9, 0.9, 1.7, 3.0], vec![0, 1, 0, 2, 1], 4.0, 3).unwrap();
    let alpha: Vec<f64> = (0..18).map(|i| 0.01 * (i % 7) as f64 + 0.02).collect();
    let params = HawkesParams::new(vec![0.2, 0.4, 0.1], alpha, vec![0.8, 3.0]).unwrap();
    // Composite Simpson on each smooth piece between events.
    let mut knots = vec![0.0];
    knots.extend(seq.times().iter().copied());
    knots.push(seq.horizon());
    knots.dedup();
    let mut integral = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let steps = 2000;
        let h = (b - a) / steps as f64;
        for p in 0..3 {
            // Evaluate just inside the interval so events at `a` count.
            let f = |t: f64| intensity_at(&seq, &params, p, t.max(a + 1e-15 * (1.0 + a)));
            let mut s = f(a) + f(b);
            for j in 1..steps {
                let c = if j % 2 == 1 { 4.0 } else { 2.0 };
                s += c * f(a + j as f64 * h);
            }
            integral += s * h / 3.0;
        }
    }
    let closed = compensator(&seq, &params);
    assert!((integral - closed).abs() <= 1e-9 * closed, "{integral} vs {closed}");
}

#[test]
fn large_instance_backends_agree() {
    let n = 20_000;
    let m = 16;
    let mut times = Vec::with_capacity(n);
    let mut marks = Vec::with_capacity(n);
    let mut state = 12345u64;
    let mut t = 0.0;
    for _ in 0..n {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        t += ((state >> 11) as f64 / (1u64 << 53) as f64) * 0.01;
        times.push(t);
        marks.push((state >> 40) as usize % m);
    }
    let seq = validate_sequence(times, marks, t, m).unwrap();
    let alpha = (0..2 * m * m).map(|i| 0.002 * ((i * 7) % 11) as f64).collect();
    let params = HawkesParams::new(vec![0.3; m], alpha, vec![0.5, 4.0]).unwrap();
    let a = log_likelihood(&seq, &params, Backend::Sequential, &Serial).unwrap();
    let b = log_likelihood(&seq, &params, Backend::Scan, &Threads(4)).unwrap();
    assert!(rel_close(a, b, 1e-10), "{a} vs {b}");
    let c = log_likelihood(&seq, &params, Backend::Scan, &Serial).unwrap();
    assert_eq!(b.to_bits(), c.to_bits());
    let one = excitation_states(&seq, &params, Backend::Scan, &Serial).unwrap();
    let many = excitation_states(&seq, &params, Backend::Scan, &Threads(8)).unwrap();
    assert_eq!(one.values, many.values);
    let nll = likelihood::penalized_nll(&seq, &params, &Default::default(), Backend::Scan, &Serial).unwrap();
    assert!(nll.is_finite());
}
