use lwm::codec::{majority_vote, Watermark};
use lwm::rng::{derive_bytes, SplitMix64};
use lwm::stats::{
    attribute, binomial_tail_count, detect, detection_threshold, kolmogorov_sf, ks_test_standard_normal,
    tail_probability, welch_ttest, AttributionDirectory,
};
use num_bigint::BigUint;

fn pascal_row(k: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::from(1u32)];
    for _ in 0..k {
        let mut next = vec![BigUint::from(1u32); row.len() + 1];
        for i in 1..row.len() {
            next[i] = &row[i - 1] + &row[i];
        }
        row = next;
    }
    row
}

/// Smallest τ with `C(K, ≥τ) · denom ≤ 2^K`, i.e. tail ≤ 1/denom.
fn pascal_tau(k: usize, denom: u64) -> usize {
    let row = pascal_row(k);
    let total = BigUint::from(1u32) << k;
    let mut tail = BigUint::from(0u32);
    let mut tau = k + 1;
    for t in (0..=k).rev() {
        tail += &row[t];
        if &tail * denom > total {
            break;
        }
        tau = t;
    }
    tau
}

#[test]
fn thresholds_match_pascal_oracle() {
    for k in [2usize, 8, 16, 32, 48, 64, 100, 128, 256, 512] {
        for denom in [10u64, 1_000, 10_000, 1_000_000, 1_000_000_000] {
            let fpr = 1.0 / denom as f64;
            let got = detection_threshold(k, fpr).unwrap().tau;
            assert_eq!(got, pascal_tau(k, denom), "K={k} fpr={fpr}");
        }
    }
    assert_eq!(detection_threshold(32, 1e-6).unwrap().tau, 30);
    assert_eq!(detection_threshold(48, 1e-6).unwrap().tau, 41);
    assert_eq!(detection_threshold(256, 1e-6).unwrap().tau, 167);
}

#[test]
fn threshold_is_minimal() {
    for k in [32usize, 48, 128, 256] {
        for fpr in [1e-4, 1e-6] {
            let tau = detection_threshold(k, fpr).unwrap().tau;
            assert!(tail_probability(k, tau) <= fpr);
            assert!(tail_probability(k, tau - 1) > fpr, "K={k} fpr={fpr} tau={tau} not minimal");
        }
    }
}

#[test]
fn tail_counts_match_pascal_rows() {
    for k in [1usize, 7, 33, 256] {
        let row = pascal_row(k);
        for from in [0, 1, k / 2, k] {
            let want: BigUint = row[from..].iter().sum();
            assert_eq!(binomial_tail_count(k, from), want);
        }
        assert_eq!(binomial_tail_count(k, k + 1), BigUint::from(0u32));
    }
    assert_eq!(tail_probability(10, 0), 1.0);
}

#[test]
fn random_guess_false_positive_rate_matches_exact_tail() {
    // K = 32 at fpr 1e-3: P(matches > τ) = tail(τ + 1).
    let k = 32;
    let thresh = detection_threshold(k, 1e-3).unwrap();
    let p = tail_probability(k, thresh.tau + 1);
    let m: Vec<bool> = (0..k).map(|i| i % 2 == 0).collect();
    let mut s = SplitMix64::new(5);
    let n = 1_000_000u32;
    let mut hits = 0u32;
    for _ in 0..n {
        let word = s.next_u64();
        let guess: Vec<bool> = (0..k).map(|i| word >> i & 1 == 1).collect();
        hits += detect(&m, &guess, &thresh).unwrap() as u32;
    }
    let rate = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((rate - p).abs() < 4.0 * se, "rate {rate} vs exact {p}");
    assert!(rate <= 1e-3 + 4.0 * se);
}

fn random_watermark(k: usize, label: &str, i: u64) -> Watermark {
    Watermark::random(k, derive_bytes(label, &[i])).unwrap()
}

#[test]
fn attribution_union_bound_threshold() {
    let sigs: Vec<Watermark> = (0..1000).map(|i| random_watermark(256, "user", i)).collect();
    let dir = AttributionDirectory::new(sigs.clone(), 1e-6).unwrap();
    assert_eq!(dir.tau_attr(), pascal_tau(256, 1_000_000_000));
    assert_eq!(dir.tau_attr(), 176);

    // Random watermarks are never attributed.
    for i in 0..2000 {
        let guess = random_watermark(256, "stranger", i);
        assert_eq!(attribute(guess.bits(), &dir).unwrap().user, None);
    }

    // Each user's watermark with 20% of bits flipped still names that user.
    let mut s = SplitMix64::new(9);
    for (u, sig) in sigs.iter().enumerate().step_by(37) {
        let noisy: Vec<bool> = sig.bits().iter().map(|&b| b ^ (s.next_unit() < 0.2)).collect();
        let a = attribute(&noisy, &dir).unwrap();
        assert_eq!(a.user, Some(u), "matches {}", a.matches);
    }
}

#[test]
fn majority_of_33_matches_exact_binomial() {
    // Exact P(Bin(33, 0.7) ≥ 17) from the pmf.
    let (n, p) = (33u32, 0.7f64);
    let mut exact = 0.0;
    for j in 17..=n {
        let choose: f64 = (0..j).map(|i| (n - i) as f64 / (i + 1) as f64).product();
        exact += choose * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
    }
    assert!((exact - 0.99218).abs() < 5e-5, "exact {exact}");

    let k = 1000;
    let truth: Vec<bool> = (0..k).map(|i| i % 3 == 0).collect();
    let mut s = SplitMix64::new(33);
    let mut correct = 0usize;
    let rounds = 100;
    for _ in 0..rounds {
        let streams: Vec<Vec<bool>> = (0..n)
            .map(|_| truth.iter().map(|&b| b ^ (s.next_unit() < 1.0 - p)).collect())
            .collect();
        let (bits, tallies) = majority_vote(&streams).unwrap();
        assert!(tallies.iter().all(|t| t.total == n));
        correct += bits.iter().zip(&truth).filter(|(a, b)| a == b).count();
    }
    let trials = (k * rounds) as f64;
    let rate = correct as f64 / trials;
    let se = (exact * (1.0 - exact) / trials).sqrt();
    assert!((rate - exact).abs() < 4.0 * se, "empirical {rate} vs exact {exact}");
}

#[test]
fn welch_hand_computed_example() {
    let r = welch_ttest(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 6.0, 8.0, 10.0]).unwrap();
    // se = √(2.5/5 + 10/5) = √2.5; df = 2.5² / (0.5²/4 + 2²/4).
    assert!((r.t_value + 3.0 / 2.5f64.sqrt()).abs() < 1e-12);
    assert!((r.df - 6.25 / 1.0625).abs() < 1e-12);
    assert!(r.p_value > 0.05 && r.p_value < 0.15, "p {}", r.p_value);
}

#[test]
fn welch_rejection_rate_under_null_is_nominal() {
    let mut s = SplitMix64::new(2024);
    let reps = 10_000;
    let mut rejections = 0;
    for _ in 0..reps {
        let mut draw = |n: usize| -> Vec<f64> {
            let mut v = Vec::with_capacity(n);
            while v.len() < n {
                let (a, b) = s.next_gaussian_pair();
                v.push(a);
                v.push(b);
            }
            v.truncate(n);
            v
        };
        let (a, b) = (draw(15), draw(25));
        rejections += (welch_ttest(&a, &b).unwrap().p_value < 0.05) as u32;
    }
    let rate = rejections as f64 / reps as f64;
    assert!((rate - 0.05).abs() < 0.01, "rate {rate}");
}

#[test]
fn kolmogorov_survival_known_points() {
    // Classical critical values of the Kolmogorov distribution.
    assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
    assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
    assert!((kolmogorov_sf(1.2238) - 0.10).abs() < 1e-4);
    assert_eq!(kolmogorov_sf(0.0), 1.0);
}

#[test]
fn ks_accepts_gaussian_and_rejects_uniform() {
    let mut s = SplitMix64::new(1);
    let gauss: Vec<f64> = (0..5000).map(|_| s.next_gaussian_pair().0).collect();
    assert!(ks_test_standard_normal(&gauss).unwrap().p_value > 0.001);
    let unif: Vec<f64> = (0..5000).map(|_| s.next_unit() * 2.0 - 1.0).collect();
    assert!(ks_test_standard_normal(&unif).unwrap().p_value < 1e-6);
}
