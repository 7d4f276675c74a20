//! Property tests for the encoding layer and the design-of-experiments
//! primitives, over randomly generated mixed parameter spaces.

use proptest::prelude::*;
use tunebed::doe::{bound_region, lhs_encoded, sample_region};
use tunebed::space::{Configuration, ConfigurationSpace, Domain, ParameterSpec, Value};

/// One unnamed parameter: domain plus a default drawn from it.
fn arb_parameter() -> impl Strategy<Value = (Domain, Value)> {
    prop_oneof![
        (-1.0e3..1.0e3f64, 0.1..1.0e3f64).prop_map(|(lo, w)| (
            Domain::Real { lower: lo, upper: lo + w },
            Value::Real(lo),
        )),
        (-1000i64..1000, 1i64..500).prop_map(|(lo, w)| (
            Domain::Integer { lower: lo, upper: lo + w },
            Value::Int(lo),
        )),
        Just((Domain::Boolean, Value::Bool(false))),
        (2usize..6).prop_map(|k| (
            Domain::Categorical { categories: (0..k).map(|c| format!("c{c}")).collect() },
            Value::Text("c0".into()),
        )),
    ]
}

fn arb_space() -> impl Strategy<Value = ConfigurationSpace> {
    proptest::collection::vec(arb_parameter(), 1..=13).prop_map(|parts| {
        let params = parts
            .into_iter()
            .enumerate()
            .map(|(i, (domain, default))| ParameterSpec { name: format!("p{i}"), domain, default })
            .collect();
        ConfigurationSpace::new("prop", params).expect("generated parameters are well formed")
    })
}

/// A strategy for one valid configuration of `space`.
fn config_strategy(space: &ConfigurationSpace) -> BoxedStrategy<Configuration> {
    let parts: Vec<BoxedStrategy<Value>> = space
        .parameters()
        .iter()
        .map(|p| match &p.domain {
            Domain::Real { lower, upper } => (*lower..=*upper).prop_map(Value::Real).boxed(),
            Domain::Integer { lower, upper } => (*lower..=*upper).prop_map(Value::Int).boxed(),
            Domain::Boolean => any::<bool>().prop_map(Value::Bool).boxed(),
            Domain::Categorical { categories } => {
                let cats = categories.clone();
                (0..cats.len()).prop_map(move |i| Value::Text(cats[i].clone())).boxed()
            }
        })
        .collect();
    parts.prop_map(Configuration::new).boxed()
}

fn arb_space_and_configs(
    count: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (ConfigurationSpace, Vec<Configuration>)> {
    arb_space().prop_flat_map(move |space| {
        let configs = proptest::collection::vec(config_strategy(&space), count.clone());
        (Just(space), configs)
    })
}

proptest! {
    #[test]
    fn encode_then_decode_returns_the_same_configuration(
        (space, configs) in arb_space_and_configs(1..=1)
    ) {
        let encoded = space.encode(&configs[0]).unwrap();
        prop_assert_eq!(encoded.len(), space.dimension());
        let back = space.decode(&encoded).unwrap();
        prop_assert_eq!(&back, &configs[0]);
    }

    #[test]
    fn latin_hypercube_hits_every_stratum_exactly_once(
        space in arb_space(), h in 1usize..=48, seed in any::<u64>()
    ) {
        let points = lhs_encoded(&space, h, seed).unwrap();
        prop_assert_eq!(points.len(), h);
        for d in 0..space.dimension() {
            let (lo, hi) = space.parameter(d).encoded_interval();
            let width = (hi - lo) / h as f64;
            let mut seen = vec![false; h];
            for p in &points {
                prop_assert!(p[d] >= lo && p[d] <= hi);
                let idx = (((p[d] - lo) / width).floor() as usize).min(h - 1);
                prop_assert!(!seen[idx], "stratum {} hit twice in dimension {}", idx, d);
                seen[idx] = true;
            }
        }
    }

    #[test]
    fn bounded_region_keeps_the_incumbent_and_stays_inside_the_space(
        (space, configs) in arb_space_and_configs(1..=8)
    ) {
        let encoded: Vec<Vec<f64>> =
            configs.iter().map(|c| space.encode(c).unwrap()).collect();
        let region = bound_region(&space, &encoded[0], &encoded[1..]).unwrap();
        prop_assert!(region.contains(&encoded[0]));
        for d in 0..space.dimension() {
            let (lo, hi) = space.parameter(d).encoded_interval();
            let (rlo, rhi) = region.bounds()[d];
            prop_assert!(rlo >= lo && rhi <= hi, "dimension {} leaves the space", d);
        }
    }

    #[test]
    fn growing_the_pool_never_widens_the_region(
        (space, configs) in arb_space_and_configs(2..=10), split in any::<proptest::sample::Index>()
    ) {
        let encoded: Vec<Vec<f64>> =
            configs.iter().map(|c| space.encode(c).unwrap()).collect();
        let pool = &encoded[1..];
        let k = split.index(pool.len() + 1);
        let small = bound_region(&space, &encoded[0], &pool[..k]).unwrap();
        let big = bound_region(&space, &encoded[0], pool).unwrap();
        for d in 0..space.dimension() {
            let (slo, shi) = small.bounds()[d];
            let (blo, bhi) = big.bounds()[d];
            prop_assert!(blo >= slo && bhi <= shi, "pool growth widened dimension {}", d);
        }
    }

    #[test]
    fn region_samples_decode_to_valid_configurations(
        (space, configs) in arb_space_and_configs(2..=6), count in 1usize..=16, seed in any::<u64>()
    ) {
        let encoded: Vec<Vec<f64>> =
            configs.iter().map(|c| space.encode(c).unwrap()).collect();
        let region = bound_region(&space, &encoded[0], &encoded[1..]).unwrap();
        let samples = sample_region(&space, &region, count, seed).unwrap();
        prop_assert_eq!(samples.len(), count);
        for s in &samples {
            prop_assert!(space.validate(s).unwrap().is_empty());
        }
    }
}
