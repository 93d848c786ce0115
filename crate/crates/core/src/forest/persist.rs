//! `forest-v1` JSON documents: configuration, feature names and each tree as
//! parallel node arrays (leaves have `feature = -1`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Forest, ForestConfig, Node, RegressionTree, SplitCandidate};
use crate::{Error, Result};

pub const FOREST_SCHEMA: &str = "forest-v1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForestDocument {
    schema: String,
    config: ForestConfig,
    mtry: usize,
    feature_names: Vec<String>,
    trees: Vec<FlatTree>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FlatTree {
    feature: Vec<i64>,
    threshold: Vec<f64>,
    sse_reduction: Vec<f64>,
    value: Vec<f64>,
    left: Vec<i64>,
    right: Vec<i64>,
    n_samples: Vec<usize>,
}

impl FlatTree {
    fn from_tree(tree: &RegressionTree) -> Self {
        let mut flat = FlatTree::default();
        for node in &tree.nodes {
            match *node {
                Node::Leaf { value, n_samples } => {
                    flat.feature.push(-1);
                    flat.threshold.push(0.0);
                    flat.sse_reduction.push(0.0);
                    flat.value.push(value);
                    flat.left.push(-1);
                    flat.right.push(-1);
                    flat.n_samples.push(n_samples);
                }
                Node::Split {
                    split,
                    n_samples,
                    left,
                    right,
                } => {
                    flat.feature.push(split.feature as i64);
                    flat.threshold.push(split.threshold);
                    flat.sse_reduction.push(split.sse_reduction);
                    flat.value.push(0.0);
                    flat.left.push(left as i64);
                    flat.right.push(right as i64);
                    flat.n_samples.push(n_samples);
                }
            }
        }
        flat
    }

    fn into_tree(self, n_features: usize) -> Result<RegressionTree> {
        let n = self.feature.len();
        let lens = [
            self.threshold.len(),
            self.sse_reduction.len(),
            self.value.len(),
            self.left.len(),
            self.right.len(),
            self.n_samples.len(),
        ];
        if n == 0 || lens.iter().any(|&l| l != n) {
            return Err(Error::Shape("tree node arrays are empty or of unequal length".into()));
        }
        let child = |c: i64, at: usize| -> Result<usize> {
            if c > at as i64 && (c as usize) < n {
                Ok(c as usize)
            } else {
                Err(Error::Shape(format!("node {at} has invalid child {c}")))
            }
        };
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let node = if self.feature[i] < 0 {
                Node::Leaf {
                    value: self.value[i],
                    n_samples: self.n_samples[i],
                }
            } else {
                let feature = self.feature[i] as usize;
                if feature >= n_features {
                    return Err(Error::Shape(format!("node {i} splits on feature {feature}")));
                }
                Node::Split {
                    split: SplitCandidate {
                        feature,
                        threshold: self.threshold[i],
                        sse_reduction: self.sse_reduction[i],
                    },
                    n_samples: self.n_samples[i],
                    left: child(self.left[i], i)?,
                    right: child(self.right[i], i)?,
                }
            };
            nodes.push(node);
        }
        Ok(RegressionTree { nodes, n_features })
    }
}

impl Forest {
    pub fn to_json(&self) -> Result<String> {
        let doc = ForestDocument {
            schema: FOREST_SCHEMA.to_string(),
            config: self.config,
            mtry: self.mtry,
            feature_names: self.feature_names.clone(),
            trees: self.trees.iter().map(FlatTree::from_tree).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    /// Parses a `forest-v1` document; any other schema tag is rejected.
    pub fn from_json(text: &str) -> Result<Forest> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("schema")
            .and_then(|s| s.as_str())
            .unwrap_or("<missing>");
        if found != FOREST_SCHEMA {
            return Err(Error::UnsupportedVersion {
                found: found.to_string(),
                expected: FOREST_SCHEMA.to_string(),
            });
        }
        let doc: ForestDocument = serde_json::from_value(value)?;
        let p = doc.feature_names.len();
        if doc.trees.is_empty() || doc.mtry == 0 || doc.mtry > p {
            return Err(Error::Shape("forest document has no trees or bad mtry".into()));
        }
        let trees = doc
            .trees
            .into_iter()
            .map(|t| t.into_tree(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Forest {
            trees,
            config: doc.config,
            mtry: doc.mtry,
            feature_names: doc.feature_names,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Forest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Forest::from_json(&text)
    }
}
