use super::dataset::Dataset;
use crate::Result;

/// Rows whose original sensitive category is `base`, with the sensitive cell
/// rewritten to `target`. Labels are carried unchanged.
#[derive(Debug, Clone)]
pub struct Partition {
    pub base: usize,
    pub target: usize,
    /// Row indices into the source dataset.
    pub rows: Vec<usize>,
    pub data: Dataset,
}

/// Every sensitive-category rewrite of a dataset, partitioned by
/// `(base, target)` in base-major order.
#[derive(Debug, Clone)]
pub struct PerturbedDataset {
    cardinality: usize,
    partitions: Vec<Partition>,
}

impl PerturbedDataset {
    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn partition(&self, base: usize, target: usize) -> &Partition {
        &self.partitions[base * self.cardinality + target]
    }

    /// Total rewritten rows, `N · C^s`.
    pub fn len(&self) -> usize {
        self.partitions.iter().map(|p| p.rows.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `|D′_{base→target}|` for every pair, base-major.
    pub fn sizes(&self) -> Vec<(usize, usize, usize)> {
        self.partitions
            .iter()
            .map(|p| (p.base, p.target, p.rows.len()))
            .collect()
    }
}

pub fn perturb(ds: &Dataset) -> Result<PerturbedDataset> {
    let schema = ds.schema();
    let cs = schema.sensitive_cardinality();
    let groups = ds.sensitive_groups();
    let mut partitions = Vec::with_capacity(cs * cs);
    for base in 0..cs {
        let rows: Vec<usize> = (0..ds.len()).filter(|&n| groups[n] == base).collect();
        let subset = ds.select(&rows);
        for target in 0..cs {
            partitions.push(Partition {
                base,
                target,
                rows: rows.clone(),
                data: subset.with_sensitive(target)?,
            });
        }
    }
    Ok(PerturbedDataset {
        cardinality: cs,
        partitions,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{FeatureSpec, Schema, Task};

    fn forty_sixty() -> Dataset {
        let schema = Arc::new(
            Schema::new(
                vec![
                    FeatureSpec::continuous("age"),
                    FeatureSpec::categorical("gender", &["f", "m"]),
                ],
                1,
                "y",
                Task::Classification,
            )
            .unwrap(),
        );
        let mut values = Vec::new();
        let mut y = Vec::new();
        for n in 0..100 {
            values.push(n as f64 * 0.1);
            values.push(if n % 5 < 2 { 0.0 } else { 1.0 });
            y.push((n % 2) as f64);
        }
        Dataset::from_rows(schema, values, y).unwrap()
    }

    #[test]
    fn forty_sixty_accounting() {
        let ds = forty_sixty();
        let pd = perturb(&ds).unwrap();
        assert_eq!(pd.len(), 200);
        assert_eq!(pd.sizes(), vec![(0, 0, 40), (0, 1, 40), (1, 0, 60), (1, 1, 60)]);
    }

    #[test]
    fn identity_partition_is_original_subset() {
        let ds = forty_sixty();
        let pd = perturb(&ds).unwrap();
        for base in 0..2 {
            let part = pd.partition(base, base);
            assert_eq!(part.data, ds.select(&part.rows));
        }
    }

    #[test]
    fn non_sensitive_columns_are_untouched() {
        let ds = forty_sixty();
        let pd = perturb(&ds).unwrap();
        for part in pd.partitions() {
            let orig = ds.select(&part.rows);
            for n in 0..part.data.len() {
                assert_eq!(part.data.value(n, 0), orig.value(n, 0));
                assert_eq!(part.data.category(n, 1), part.target);
            }
            assert_eq!(part.data.y(), orig.y());
        }
    }
}
