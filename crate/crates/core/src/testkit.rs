//! Fixtures and random model generation for tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::confidence::{FractilePoint, SecondOrderAnnotation};
use crate::model::{
    ChanceVariable, ConditionalTable, DecisionModel, DecisionVariable, NewParent, ParamRef, UtilityTable,
};

/// The shipped Table 1 + bet model file.
pub const FOOTBALL_JSON: &str = include_str!("../../../models/football.json");

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn wager() -> (DecisionVariable, UtilityTable) {
    (
        DecisionVariable::new("Wager", strings(&["Bet", "Do-not-bet"])),
        UtilityTable::new(strings(&["Win"]), vec![vec![5000.0, -5000.0], vec![0.0, 0.0]]),
    )
}

/// p(Win | Sus, Field, Bonus) in mixed-radix order (Sus, Field, Bonus with
/// outcomes yes/no, dry/wet, yes/no).
const WIN_GIVEN_EVENTS: [[f64; 2]; 8] = [
    [0.6, 0.4],
    [0.5, 0.5],
    [0.5, 0.5],
    [0.4, 0.6],
    [0.7, 0.3],
    [0.6, 0.4],
    [0.6, 0.4],
    [0.5, 0.5],
];

/// The refined football model: three independent influencing events and a
/// conditional probability of a win, with no annotations.
pub fn football() -> DecisionModel {
    let (decision, utility) = wager();
    let mut chance = table_one_parents();
    chance.push(ChanceVariable::new(
        "Win",
        strings(&["yes", "no"]),
        strings(&["Sus", "Field", "Bonus"]),
        WIN_GIVEN_EVENTS.iter().map(|row| row.to_vec()).collect(),
    ));
    DecisionModel::new(chance, decision, utility, vec![])
}

fn table_one_parents() -> Vec<ChanceVariable> {
    vec![
        ChanceVariable::root("Sus", &["yes", "no"], &[0.6, 0.4]),
        ChanceVariable::root("Field", &["dry", "wet"], &[0.7, 0.3]),
        ChanceVariable::root("Bonus", &["yes", "no"], &[0.2, 0.8]),
    ]
}

/// The bet with a directly assessed p(Win=yes).
pub fn football_direct(p_win: f64) -> DecisionModel {
    let (decision, utility) = wager();
    DecisionModel::new(
        vec![ChanceVariable::root("Win", &["yes", "no"], &[p_win, 1.0 - p_win])],
        decision,
        utility,
        vec![],
    )
}

pub fn table_one_events() -> Vec<NewParent> {
    table_one_parents().into_iter().map(NewParent::New).collect()
}

pub fn table_one_cpt() -> ConditionalTable {
    let mut cpt = ConditionalTable::new();
    let mut i = 0;
    for sus in ["yes", "no"] {
        for field in ["dry", "wet"] {
            for bonus in ["yes", "no"] {
                cpt = cpt.row(
                    &[("Sus", sus), ("Field", field), ("Bonus", bonus)],
                    &WIN_GIVEN_EVENTS[i],
                );
                i += 1;
            }
        }
    }
    cpt
}

/// Beta fitted to quartiles 0.5 / 0.6 on p(Win=yes).
pub fn football_annotation(cost: f64) -> SecondOrderAnnotation {
    SecondOrderAnnotation::from_fractiles(
        ParamRef::probability("Win", "yes", &[]),
        "one hour extending the conversation",
        cost,
        &[FractilePoint::new(0.25, 0.5), FractilePoint::new(0.75, 0.6)],
        None,
    )
    .expect("football quartiles fit")
}

/// Random valid model: up to `max_vars` chance variables with up to
/// `max_outcomes` outcomes each, at most two parents per variable drawn
/// from earlier variables, 1-3 alternatives and utilities in [-100, 100].
pub fn random_model(seed: u64, max_vars: usize, max_outcomes: usize) -> DecisionModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_vars = rng.random_range(1..=max_vars);
    let mut chance: Vec<ChanceVariable> = Vec::with_capacity(n_vars);
    for v in 0..n_vars {
        let width = rng.random_range(2..=max_outcomes);
        let outcomes: Vec<String> = (0..width).map(|o| format!("o{o}")).collect();
        let mut parents: Vec<usize> = (0..v).filter(|_| rng.random_bool(0.4)).collect();
        parents.truncate(2);
        let rows = parents.iter().map(|&p| chance[p].outcomes().len()).product::<usize>();
        let table = (0..rows).map(|_| random_distribution(&mut rng, width)).collect();
        chance.push(ChanceVariable::new(
            format!("V{v}"),
            outcomes,
            parents.iter().map(|&p| format!("V{p}")).collect(),
            table,
        ));
    }
    let n_alts = rng.random_range(1..=3);
    let relevant: Vec<usize> = (0..n_vars).filter(|_| rng.random_bool(0.6)).collect();
    let cols: usize = relevant.iter().map(|&r| chance[r].outcomes().len()).product();
    let values = (0..n_alts)
        .map(|_| (0..cols).map(|_| rng.random_range(-100.0..100.0)).collect())
        .collect();
    DecisionModel::new(
        chance,
        DecisionVariable::new("D", (0..n_alts).map(|a| format!("a{a}")).collect()),
        UtilityTable::new(relevant.iter().map(|&r| format!("V{r}")).collect(), values),
        vec![],
    )
}

fn random_distribution(rng: &mut impl Rng, width: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..width)
        .map(|_| {
            if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random_range(0.01..1.0)
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return vec![1.0 / width as f64; width];
    }
    let mut row: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // Make the row sum exactly representable as 1 by pushing the rounding
    // error into the last entry.
    let head: f64 = row[..width - 1].iter().sum();
    row[width - 1] = (1.0 - head).max(0.0);
    row
}

/// Every probability-entry reference of a model (one per outcome per row).
pub fn probability_refs(model: &DecisionModel) -> Vec<ParamRef> {
    let mut out = Vec::new();
    for v in model.chance() {
        for r in 0..v.rows().len() {
            let given = model.decode_assignment(v.parents(), r);
            for o in v.outcomes() {
                out.push(ParamRef::Probability {
                    variable: v.name().to_string(),
                    outcome: o.clone(),
                    given: given.clone(),
                });
            }
        }
    }
    out
}
