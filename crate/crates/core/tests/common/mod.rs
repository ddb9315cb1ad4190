#![allow(dead_code)]

use std::collections::BTreeMap;

use sejkit_core::elicitation::{ElicitedQuantiles, IntrinsicRange, PiecewiseDistribution};
use sejkit_core::propagation::{BasketDefinition, Scenario, ScenarioSet};

/// Category, CPI weight (parts per thousand) and the (5th, 50th, 95th)
/// percent changes under scenarios A, B, C.
pub type Row = (&'static str, f64, [(f64, f64, f64); 3]);

pub const TABLE: [Row; 10] = [
    ("Soft drinks etc.", 9.0, [(-1.0, 9.0, 37.0), (-2.0, 9.0, 30.0), (-1.0, 9.0, 30.0)]),
    ("Coffee, tea & cocoa", 3.0, [(-1.0, 6.0, 34.0), (-2.0, 5.0, 30.0), (0.0, 6.0, 31.0)]),
    ("Sugar, jam, etc.", 10.0, [(-7.0, 6.0, 25.0), (-8.0, 5.0, 24.0), (-5.0, 5.0, 20.0)]),
    ("Vegetables", 13.0, [(-8.0, 16.0, 51.0), (-4.0, 10.0, 30.0), (-5.0, 5.0, 16.0)]),
    ("Fruit", 10.0, [(-10.0, 24.0, 61.0), (-7.0, 14.0, 40.0), (-8.0, 5.0, 24.0)]),
    ("Oil & fats", 2.0, [(-8.0, 20.0, 47.0), (-10.0, 20.0, 38.0), (-11.0, 5.0, 27.0)]),
    ("Milk, cheese & eggs", 12.0, [(-6.0, 17.0, 50.0), (-8.0, 10.0, 21.0), (-5.0, 5.0, 19.0)]),
    ("Fish", 4.0, [(-5.0, 19.0, 44.0), (-4.0, 18.0, 31.0), (-4.0, 10.0, 29.0)]),
    ("Meat", 21.0, [(0.0, 20.0, 57.0), (-1.0, 18.0, 30.0), (-1.0, 17.0, 40.0)]),
    ("Bread & Cereals", 16.0, [(0.0, 19.0, 40.0), (-4.0, 16.0, 34.0), (-5.0, 5.0, 19.0)]),
];

pub fn scenario(index: usize) -> BTreeMap<String, PiecewiseDistribution<f64>> {
    TABLE
        .iter()
        .map(|(name, _, qs)| {
            let (a, b, c) = qs[index];
            let q = ElicitedQuantiles::new(a, b, c).unwrap();
            let r = IntrinsicRange::for_quantiles(&q, 0.1).unwrap();
            (name.to_string(), PiecewiseDistribution::fit(&q, &r).unwrap())
        })
        .collect()
}

pub fn scenario_set() -> ScenarioSet<f64> {
    let scenarios = ["A", "B", "C"]
        .iter()
        .enumerate()
        .map(|(i, id)| Scenario { id: id.to_string(), categories: scenario(i) })
        .collect();
    ScenarioSet::with_equal_likelihoods(scenarios).unwrap()
}

pub fn cpi_basket(cost: f64) -> BasketDefinition<f64> {
    let total: f64 = TABLE.iter().map(|t| t.1).sum();
    let cats = TABLE.iter().map(|(n, w, _)| (n.to_string(), w / total)).collect();
    BasketDefinition::new("CPI", cats, cost, "2020-12").unwrap()
}
