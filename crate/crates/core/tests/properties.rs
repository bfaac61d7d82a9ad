use auction_lab::duality::{boost, canonical_flow, is_flow, lagrangian_long_form, lagrangian_value, Flow};
use auction_lab::mechanisms::{bic_violations, payments_from_identity, InterimForm};
use auction_lab::myerson::{iron, iron_weighted, SingleDimDistribution};
use auction_lab::numerics::{from_u64, make_instance, ratio, Bidder, BidderSpec, Instance, Interest, Rational, TypeLabel};
use num_traits::Zero;
use proptest::prelude::*;

/// Strictly increasing values and positive integer weights per `(level, interest)`.
fn bidder_spec(levels: usize) -> impl Strategy<Value = BidderSpec> {
    (
        proptest::collection::vec(1u64..6, levels),
        proptest::collection::vec((1u64..7, 1u64..7), levels),
    )
        .prop_map(|(steps, weights)| {
            let values: Vec<u64> = steps
                .iter()
                .scan(0, |acc, s| {
                    *acc += s;
                    Some(*acc)
                })
                .collect();
            let total: u64 = weights.iter().map(|(a, b)| a + b).sum();
            let q = |w: u64| from_u64(w) / from_u64(total);
            BidderSpec::new(
                values,
                weights.iter().map(|&(a, _)| q(a)).collect(),
                weights.iter().map(|&(_, b)| q(b)).collect(),
            )
        })
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..5, 1usize..5)
        .prop_flat_map(|(n1, n2)| (bidder_spec(n1), bidder_spec(n2)))
        .prop_map(|(b1, b2)| make_instance(b1, b2).expect("valid by construction"))
}

/// Arbitrary interim allocations in `[0, 1]` and payments in `[-5, 5]`, in sixths.
fn interim_for(inst: &Instance) -> impl Strategy<Value = InterimForm> {
    let sizes = [inst.bidder(Bidder::One).num_types(), inst.bidder(Bidder::Two).num_types()];
    let side = |m: usize| {
        (
            proptest::collection::vec(0i64..7, m),
            proptest::collection::vec(-30i64..31, m),
        )
    };
    (side(sizes[0]), side(sizes[1])).prop_map(|((pi1, p1), (pi2, p2))| {
        let sixths = |v: Vec<i64>| v.into_iter().map(|a| ratio(a, 6)).collect::<Vec<_>>();
        InterimForm {
            pi: [sixths(pi1), sixths(pi2)],
            p: [sixths(p1), sixths(p2)],
        }
    })
}

/// Boost moves `(bidder, level, fraction of what is available)`.
fn boosts() -> impl Strategy<Value = Vec<(bool, usize, i64)>> {
    proptest::collection::vec((any::<bool>(), 1usize..5, 0i64..5), 0..4)
}

fn perturbed_flow(inst: &Instance, moves: &[(bool, usize, i64)]) -> Flow {
    let mut fl = canonical_flow(inst);
    for &(second, k, quarters) in moves {
        let b = if second { Bidder::Two } else { Bidder::One };
        if k > inst.bidder(b).levels() {
            continue;
        }
        let available = (1..=k)
            .map(|kk| fl.lambda(b, Interest::Day2, kk))
            .min()
            .expect("k >= 1");
        if available.is_zero() {
            continue;
        }
        let eps = available * ratio(quarters, 4);
        fl = boost(inst, &fl, b, k, &eps).expect("eps within the available flow");
    }
    fl
}

fn monotone(steps: &[i64]) -> Vec<Rational> {
    let mut acc = 0;
    steps
        .iter()
        .map(|s| {
            acc = (acc + s).min(12);
            ratio(acc, 12)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn lagrangian_forms_agree_on_flows(
        (inst, f, moves) in instance().prop_flat_map(|inst| {
            let f = interim_for(&inst);
            (Just(inst), f, boosts())
        })
    ) {
        let fl = perturbed_flow(&inst, &moves);
        prop_assume!(is_flow(&inst, &fl).unwrap().passed());
        let short = lagrangian_value(&inst, &fl, &f).unwrap();
        let long = lagrangian_long_form(&inst, &fl, &f).unwrap();
        prop_assert_eq!(short, long);
    }

    #[test]
    fn payments_cancel_under_a_flow(
        (inst, f, g, moves) in instance().prop_flat_map(|inst| {
            let f = interim_for(&inst);
            let g = interim_for(&inst);
            (Just(inst), f, g, boosts())
        })
    ) {
        let fl = perturbed_flow(&inst, &moves);
        prop_assume!(is_flow(&inst, &fl).unwrap().passed());
        let swapped = InterimForm { pi: f.pi.clone(), p: g.p.clone() };
        prop_assert_eq!(
            lagrangian_long_form(&inst, &fl, &f).unwrap(),
            lagrangian_long_form(&inst, &fl, &swapped).unwrap()
        );
    }

    #[test]
    fn monotone_allocations_with_identity_payments_are_bic(
        (inst, steps) in instance().prop_flat_map(|inst| {
            let n1 = inst.bidder(Bidder::One).levels();
            let n2 = inst.bidder(Bidder::Two).levels();
            let chain = |n: usize| proptest::collection::vec(0i64..5, n);
            (Just(inst), (chain(n1), chain(n1), chain(n2), chain(n2)))
        })
    ) {
        let (a1, b1, a2, b2) = steps;
        let build = |b: Bidder, day1: &[i64], extra: &[i64]| {
            let levels = inst.bidder(b).levels();
            let c = monotone(day1);
            // day2 dominates day1 pointwise, keeping both chains monotone
            let d: Vec<Rational> = c.iter().zip(monotone(extra)).map(|(c, e)| c.clone().max(e)).collect();
            let mut pi = vec![Rational::zero(); inst.bidder(b).num_types()];
            for k in 1..=levels {
                pi[TypeLabel::new(k, Interest::Day1).flat()] = c[k - 1].clone();
                pi[TypeLabel::new(k, Interest::Day2).flat()] = d[k - 1].clone();
            }
            pi
        };
        let pi = [build(Bidder::One, &a1, &b1), build(Bidder::Two, &a2, &b2)];
        let p = payments_from_identity(&inst, &pi).unwrap();
        let report = bic_violations(&inst, &InterimForm { pi, p });
        prop_assert!(report.passed(), "{}", report.summary());
    }

    #[test]
    fn ironing_conserves_mass_and_is_idempotent(
        (steps, weights) in (1usize..7).prop_flat_map(|n| {
            (proptest::collection::vec(1u64..6, n), proptest::collection::vec(1u64..9, n))
        })
    ) {
        let values: Vec<u64> = steps.iter().scan(0, |acc, s| { *acc += s; Some(*acc) }).collect();
        let total: u64 = weights.iter().sum();
        let probs: Vec<Rational> = weights.iter().map(|&w| from_u64(w) / from_u64(total)).collect();
        let d = SingleDimDistribution::new(values, probs.clone()).unwrap();
        let table = iron(&d).unwrap();

        for w in table.phi_bar.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for &(lo, hi) in &table.blocks {
            let raw: Rational = (lo..=hi).map(|k| &probs[k - 1] * &table.phi[k - 1]).sum();
            let ironed: Rational = (lo..=hi).map(|k| &probs[k - 1] * &table.phi_bar[k - 1]).sum();
            prop_assert_eq!(raw, ironed);
        }
        let (_, again) = iron_weighted(&probs, &table.phi_bar);
        prop_assert_eq!(&again, &table.phi_bar);
        let (_, pooled) = iron_weighted(&probs, &table.phi);
        prop_assert_eq!(&pooled, &table.phi_bar);
    }
}
