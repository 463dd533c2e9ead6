use std::collections::BTreeSet;

use proptest::prelude::*;
use switchtab::data::{corrupt, corrupted_count, fit_preprocessor, transform, ColumnSchema, DataError, Schema, TabularDataset};
use switchtab::tensor::Tensor;
use switchtab::util::seeded_rng;

#[derive(Clone, Debug)]
enum Col {
    Num(Vec<Option<i32>>),
    Cat(Vec<Option<u8>>),
}

fn column(rows: usize) -> impl Strategy<Value = Col> {
    let cell_missing = 0.0..0.4f64;
    prop_oneof![
        (prop::collection::vec((-1000i32..1000, 0.0..1.0f64), rows), cell_missing.clone())
            .prop_map(|(cells, p)| Col::Num(cells.into_iter().map(|(v, u)| (u >= p).then_some(v)).collect())),
        (prop::collection::vec((0u8..6, 0.0..1.0f64), rows), cell_missing).prop_map(|(cells, p)| {
            Col::Cat(cells.into_iter().map(|(v, u)| (u >= p).then_some(v)).collect())
        }),
    ]
}

fn table() -> impl Strategy<Value = Vec<Col>> {
    (2usize..=200).prop_flat_map(|rows| prop::collection::vec(column(rows), 1..=10))
}

fn dataset(cols: &[Col]) -> TabularDataset {
    let schema = Schema::new(
        cols.iter()
            .enumerate()
            .map(|(i, c)| match c {
                Col::Num(_) => ColumnSchema::numerical(&format!("n{i}")),
                Col::Cat(_) => ColumnSchema::categorical(&format!("c{i}")),
            })
            .collect(),
    )
    .unwrap();
    let rows = match &cols[0] {
        Col::Num(v) => v.len(),
        Col::Cat(v) => v.len(),
    };
    let mut csv = schema.columns.iter().map(|c| c.name.clone()).collect::<Vec<_>>().join(",");
    csv.push('\n');
    for r in 0..rows {
        let cells: Vec<String> = cols
            .iter()
            .map(|c| match c {
                Col::Num(v) => v[r].map_or("NA".into(), |x| x.to_string()),
                Col::Cat(v) => v[r].map_or(String::new(), |x| format!("L{x}")),
            })
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    let tokens: Vec<String> = ["", "NA"].iter().map(|s| s.to_string()).collect();
    TabularDataset::from_csv_reader(csv.as_bytes(), &schema, &tokens).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transformed_matrix_is_complete_scaled_and_contrast_coded(cols in table()) {
        let data = dataset(&cols);
        let prep = match fit_preprocessor(&data) {
            Ok(p) => p,
            Err(DataError::AllColumnsDropped) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let x = transform(&prep, &data).unwrap();
        prop_assert_eq!(x.n(), data.n());
        for &v in x.values() {
            prop_assert!(v.is_finite() && (0.0..=1.0).contains(&v));
        }
        let mut expected = 0;
        for c in &cols {
            match c {
                Col::Num(v) if v.iter().any(Option::is_some) => expected += 1,
                Col::Cat(v) => {
                    let k = v.iter().flatten().collect::<BTreeSet<_>>().len();
                    if k >= 2 {
                        expected += k - 1;
                    }
                }
                _ => {}
            }
        }
        prop_assert_eq!(x.m(), expected);
    }

    #[test]
    fn corruption_replaces_exactly_t_entries_from_the_pools(
        m in 1usize..25,
        rows in 1usize..40,
        ratio in 0.0..=1.0f64,
        seed in any::<u64>(),
    ) {
        let mut rng = seeded_rng(seed);
        // Pool values are negative so any replacement is visible.
        let pools: Vec<Vec<f64>> = (0..m).map(|j| vec![-1.0 - j as f64, -100.0 - j as f64]).collect();
        let batch = Tensor::new(vec![rows, m], (0..rows * m).map(|i| (i % 5) as f64 / 4.0).collect()).unwrap();
        let out = corrupt(&batch, &pools, ratio, &mut rng).unwrap();
        let t = corrupted_count(ratio, m);
        prop_assert_eq!(t, (ratio * m as f64 + 1e-9).floor() as usize);
        for r in 0..rows {
            let before = &batch.values()[r * m..(r + 1) * m];
            let after = &out.values.values()[r * m..(r + 1) * m];
            let changed: Vec<usize> = (0..m).filter(|&j| before[j] != after[j]).collect();
            prop_assert_eq!(&changed, &out.mask[r]);
            prop_assert_eq!(changed.len(), t);
            for &j in &changed {
                prop_assert!(pools[j].contains(&after[j]));
            }
        }
    }
}
