use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Categorical { categories: Vec<String> },
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn categorical(name: impl Into<String>, categories: &[&str]) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Categorical {
                categories: categories.iter().map(|c| c.to_string()).collect(),
            },
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Continuous,
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }

    pub fn cardinality(&self) -> Option<usize> {
        match &self.kind {
            FeatureKind::Categorical { categories } => Some(categories.len()),
            FeatureKind::Continuous => None,
        }
    }
}

/// On-disk schema document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDescriptor {
    pub features: Vec<FeatureDescriptor>,
    pub response: String,
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    /// `"categorical"` or `"continuous"`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sensitive: bool,
}

/// Column layout of a tabular dataset with one categorical sensitive feature.
///
/// Categorical features are one-hot encoded in declaration order; feature `i`
/// with ordinal `c` among the categorical features occupies the slots
/// `onehot_range(c)` of the concatenated one-hot vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDescriptor", into = "SchemaDescriptor")]
pub struct Schema {
    features: Vec<FeatureSpec>,
    sensitive: usize,
    response: String,
    task: Task,
    cat_ordinal: Vec<Option<usize>>,
    con_ordinal: Vec<Option<usize>>,
    onehot_bounds: Vec<usize>,
}

impl Schema {
    pub fn new(
        features: Vec<FeatureSpec>,
        sensitive: usize,
        response: impl Into<String>,
        task: Task,
    ) -> Result<Self> {
        let response = response.into();
        if features.is_empty() {
            return Err(Error::Schema("no features declared".into()));
        }
        let sens = features
            .get(sensitive)
            .ok_or_else(|| Error::Schema(format!("sensitive index {sensitive} out of range")))?;
        match sens.cardinality() {
            None => {
                return Err(Error::Schema(format!(
                    "sensitive feature `{}` must be categorical",
                    sens.name
                )))
            }
            Some(c) if c < 2 => {
                return Err(Error::Schema(format!(
                    "sensitive feature `{}` needs at least two categories",
                    sens.name
                )))
            }
            _ => {}
        }
        for (i, f) in features.iter().enumerate() {
            if f.name == response || features[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Schema(format!("duplicate column name `{}`", f.name)));
            }
            if let FeatureKind::Categorical { categories } = &f.kind {
                if categories.is_empty() {
                    return Err(Error::Schema(format!("`{}` declares no categories", f.name)));
                }
                for (j, c) in categories.iter().enumerate() {
                    if c.is_empty() || categories[..j].contains(c) {
                        return Err(Error::Schema(format!(
                            "`{}` has an empty or duplicate category `{c}`",
                            f.name
                        )));
                    }
                }
            }
        }

        let mut cat_ordinal = Vec::with_capacity(features.len());
        let mut con_ordinal = Vec::with_capacity(features.len());
        let mut onehot_bounds = vec![0];
        let (mut nc, mut nn) = (0, 0);
        for f in &features {
            match f.cardinality() {
                Some(card) => {
                    cat_ordinal.push(Some(nc));
                    con_ordinal.push(None);
                    onehot_bounds.push(onehot_bounds[nc] + card);
                    nc += 1;
                }
                None => {
                    cat_ordinal.push(None);
                    con_ordinal.push(Some(nn));
                    nn += 1;
                }
            }
        }
        Ok(Schema {
            features,
            sensitive,
            response,
            task,
            cat_ordinal,
            con_ordinal,
            onehot_bounds,
        })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &FeatureSpec {
        &self.features[i]
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn response(&self) -> &str {
        &self.response
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Number of features, p.
    pub fn p(&self) -> usize {
        self.features.len()
    }

    pub fn p_cat(&self) -> usize {
        self.onehot_bounds.len() - 1
    }

    pub fn p_con(&self) -> usize {
        self.p() - self.p_cat()
    }

    /// Total one-hot width, Σ cardinalities.
    pub fn p_onehot(&self) -> usize {
        *self.onehot_bounds.last().unwrap()
    }

    /// Position σ of the sensitive feature among all features.
    pub fn sensitive(&self) -> usize {
        self.sensitive
    }

    /// Number of sensitive categories, C^s.
    pub fn sensitive_cardinality(&self) -> usize {
        self.features[self.sensitive].cardinality().unwrap()
    }

    pub fn cardinality(&self, i: usize) -> Option<usize> {
        self.features[i].cardinality()
    }

    /// Ordinal of feature `i` among categorical features.
    pub fn cat_ordinal(&self, i: usize) -> Option<usize> {
        self.cat_ordinal[i]
    }

    /// Ordinal of feature `i` among continuous features.
    pub fn con_ordinal(&self, i: usize) -> Option<usize> {
        self.con_ordinal[i]
    }

    /// Boundaries of the one-hot blocks, length `p_cat + 1`.
    pub fn onehot_bounds(&self) -> &[usize] {
        &self.onehot_bounds
    }

    /// One-hot slots of categorical feature `i`.
    pub fn onehot_range(&self, i: usize) -> Option<Range<usize>> {
        self.cat_ordinal[i].map(|c| self.onehot_bounds[c]..self.onehot_bounds[c + 1])
    }

    /// Flat one-hot index of `(feature, category)`.
    pub fn onehot_index(&self, feature: usize, category: usize) -> Option<usize> {
        let r = self.onehot_range(feature)?;
        (category < r.len()).then_some(r.start + category)
    }

    /// Inverse of [`Schema::onehot_index`].
    pub fn decode_onehot(&self, flat: usize) -> Option<(usize, usize)> {
        if flat >= self.p_onehot() {
            return None;
        }
        let ord = self.onehot_bounds.partition_point(|&b| b <= flat) - 1;
        let feature = self.cat_ordinal.iter().position(|&o| o == Some(ord))?;
        Some((feature, flat - self.onehot_bounds[ord]))
    }

    pub fn category_index(&self, feature: usize, label: &str) -> Option<usize> {
        match &self.features[feature].kind {
            FeatureKind::Categorical { categories } => categories.iter().position(|c| c == label),
            FeatureKind::Continuous => None,
        }
    }

    pub fn category_label(&self, feature: usize, index: usize) -> Option<&str> {
        match &self.features[feature].kind {
            FeatureKind::Categorical { categories } => categories.get(index).map(|s| s.as_str()),
            FeatureKind::Continuous => None,
        }
    }

    pub fn descriptor(&self) -> SchemaDescriptor {
        SchemaDescriptor::from(self.clone())
    }
}

impl TryFrom<SchemaDescriptor> for Schema {
    type Error = Error;

    fn try_from(d: SchemaDescriptor) -> Result<Self> {
        let mut sensitive = None;
        let mut features = Vec::with_capacity(d.features.len());
        for (i, f) in d.features.into_iter().enumerate() {
            if f.sensitive {
                if sensitive.is_some() {
                    return Err(Error::Schema("more than one sensitive feature declared".into()));
                }
                sensitive = Some(i);
            }
            let kind = match f.kind.as_str() {
                "categorical" => FeatureKind::Categorical {
                    categories: f.categories,
                },
                "continuous" => {
                    if !f.categories.is_empty() {
                        return Err(Error::Schema(format!(
                            "continuous feature `{}` declares categories",
                            f.name
                        )));
                    }
                    FeatureKind::Continuous
                }
                other => {
                    return Err(Error::Schema(format!(
                        "feature `{}` has unknown kind `{other}`",
                        f.name
                    )))
                }
            };
            features.push(FeatureSpec { name: f.name, kind });
        }
        let sensitive =
            sensitive.ok_or_else(|| Error::Schema("no sensitive feature declared".into()))?;
        Schema::new(features, sensitive, d.response, d.task)
    }
}

impl From<Schema> for SchemaDescriptor {
    fn from(s: Schema) -> Self {
        let sensitive = s.sensitive;
        SchemaDescriptor {
            features: s
                .features
                .into_iter()
                .enumerate()
                .map(|(i, f)| {
                    let (kind, categories) = match f.kind {
                        FeatureKind::Categorical { categories } => ("categorical", categories),
                        FeatureKind::Continuous => ("continuous", Vec::new()),
                    };
                    FeatureDescriptor {
                        name: f.name,
                        kind: kind.to_string(),
                        categories,
                        sensitive: i == sensitive,
                    }
                })
                .collect(),
            response: s.response,
            task: s.task,
        }
    }
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Schema> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_schema(schema: &Schema, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(schema).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
