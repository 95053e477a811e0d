//! A synthetic stand-in for the 103-row concrete slump table: seven mixture
//! predictors with the original numbers of distinct values, and three
//! responses where slump and flow are strongly correlated and strength is
//! only weakly related to them. Selection-bias experiments permute the
//! predictors, so only the value multiplicities and response distribution
//! matter there.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Column, ColumnRole, ColumnValues, Dataset};

pub const CONCRETE_PREDICTORS: [&str; 7] = ["cement", "slag", "fly_ash", "water", "sp", "coarse_aggr", "fine_aggr"];
pub const CONCRETE_RESPONSES: [&str; 3] = ["slump", "flow", "strength"];
/// Distinct values per predictor in the original table.
pub const CONCRETE_UNIQUE_COUNTS: [usize; 7] = [80, 63, 58, 70, 32, 92, 90];

const ROWS: usize = 103;
const SEED: u64 = 0x00C0_4C2E_7E00;
const RANGES: [(f64, f64); 7] = [
    (137.0, 374.0),
    (0.0, 193.0),
    (0.0, 260.0),
    (160.0, 240.0),
    (4.4, 19.0),
    (708.0, 1049.9),
    (640.6, 902.0),
];

/// Deterministic synthetic table; see the module docs.
pub fn synthetic_concrete() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(7);
    for (j, (&(lo, hi), &u)) in RANGES.iter().zip(&CONCRETE_UNIQUE_COUNTS).enumerate() {
        // distinct values on a 0.1 grid; the two admixtures include zero,
        // which takes most of the repeated rows
        let steps = ((hi - lo) * 10.0).round() as usize + 1;
        let admixture = j == 1 || j == 2;
        let mut distinct: Vec<f64> = if admixture {
            let mut v: Vec<f64> = index::sample(&mut rng, steps - 1, u - 1)
                .into_iter()
                .map(|i| lo + (i + 1) as f64 / 10.0)
                .collect();
            v.push(0.0);
            v
        } else {
            index::sample(&mut rng, steps, u)
                .into_iter()
                .map(|i| lo + i as f64 / 10.0)
                .collect()
        };
        distinct.sort_by(f64::total_cmp);
        let mut col = distinct.clone();
        while col.len() < ROWS {
            let v = if admixture && rng.random_bool(0.6) {
                0.0
            } else {
                distinct[rng.random_range(0..u)]
            };
            col.push(v);
        }
        col.shuffle(&mut rng);
        cols.push(col.into_iter().map(|v| (v * 10.0).round() / 10.0).collect());
    }

    let z = |v: f64, m: f64, s: f64| (v - m) / s;
    let mut responses: [Vec<f64>; 3] = Default::default();
    for i in 0..ROWS {
        let (cement, slag, fly, water, sp, coarse) =
            (cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i], cols[5][i]);
        let e: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let slump =
            (18.0 + 5.0 * z(water, 200.0, 20.0) - 3.0 * z(slag, 80.0, 60.0) + 1.5 * z(sp, 8.5, 3.0) + 4.0 * e[0])
                .clamp(0.0, 29.0);
        let flow = (20.0 + 1.8 * slump + 4.0 * e[1]).clamp(20.0, 78.0);
        let strength = 36.0 + 6.0 * z(cement, 230.0, 60.0) + 4.0 * z(fly, 150.0, 80.0)
            - 3.0 * z(water, 200.0, 20.0)
            - 2.0 * z(coarse, 880.0, 90.0)
            + 5.0 * e[2];
        for (k, v) in [slump, flow, strength].into_iter().enumerate() {
            responses[k].push((v * 100.0).round() / 100.0);
        }
    }

    let numeric = |name: &str, role: ColumnRole, v: Vec<f64>| Column {
        name: name.into(),
        role,
        missing: vec![false; v.len()],
        values: ColumnValues::Numeric(v),
    };
    let columns = CONCRETE_PREDICTORS
        .iter()
        .zip(cols)
        .map(|(n, v)| numeric(n, ColumnRole::NumericPredictor, v))
        .chain(
            CONCRETE_RESPONSES
                .iter()
                .zip(responses)
                .map(|(n, v)| numeric(n, ColumnRole::Response, v)),
        )
        .collect();
    Dataset::from_columns(columns).expect("synthetic table is valid")
}
