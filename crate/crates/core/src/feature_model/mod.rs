//! Feature models: a feature tree with group kinds and tristate flags plus
//! cross-tree constraints, read from and written to JSON.
//!
//! ```json
//! {
//!   "name": "Car",
//!   "children": [
//!     {"name": "Engine", "relation": "mandatory", "group": "alternative",
//!      "children": [{"name": "Gas"}, {"name": "Electric"}]},
//!     {"name": "Radio", "kind": "tristate"}
//!   ],
//!   "constraints": ["Electric => !Radio'"]
//! }
//! ```
//!
//! `kind` defaults to `boolean`, `relation` to `optional` (the root has none),
//! `group` to none. Constraint syntax is described in [`expr`].

mod encode;
pub mod expr;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encode::{encode_fm, FeatureVars, VarMap};
pub use expr::{Expr, ExprError, FeatureRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    #[default]
    Boolean,
    /// Present as built-in, as a module, or absent: two variables.
    Tristate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Mandatory,
    Optional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    /// At least one child when the parent is selected.
    Or,
    /// Exactly one child when the parent is selected.
    Alternative,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    /// `None` only for the root.
    pub relation: Option<Relation>,
    pub group: Option<GroupKind>,
    pub children: Vec<Feature>,
}

impl Feature {
    pub fn new(name: impl Into<String>, kind: FeatureKind, relation: Option<Relation>) -> Feature {
        Feature {
            name: name.into(),
            kind,
            relation,
            group: None,
            children: Vec::new(),
        }
    }

    pub fn with_group(mut self, group: GroupKind) -> Feature {
        self.group = Some(group);
        self
    }

    pub fn with_children(mut self, children: Vec<Feature>) -> Feature {
        self.children = children;
        self
    }

    /// This feature and its descendants in preorder.
    pub fn preorder(&self) -> Preorder<'_> {
        Preorder { stack: vec![self] }
    }
}

pub struct Preorder<'a> {
    stack: Vec<&'a Feature>,
}

impl<'a> Iterator for Preorder<'a> {
    type Item = &'a Feature;

    fn next(&mut self) -> Option<&'a Feature> {
        let f = self.stack.pop()?;
        self.stack.extend(f.children.iter().rev());
        Some(f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FmError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("feature name `{0}` is used more than once")]
    DuplicateName(String),
    #[error("feature with an empty name")]
    EmptyName,
    #[error("the root feature `{0}` cannot have a relation")]
    RootRelation(String),
    #[error("feature `{0}` has a group but fewer than two children")]
    GroupTooSmall(String),
    #[error("constraint {index}: {source}")]
    Syntax { index: usize, source: ExprError },
    #[error("constraint {index} refers to unknown feature `{name}`")]
    UnknownFeature { index: usize, name: String },
    #[error("constraint {index} uses `{name}'` but `{name}` is not tristate")]
    NotTristate { index: usize, name: String },
    #[error("only the root may carry constraints (found under `{0}`)")]
    NestedConstraints(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureModel {
    root: Feature,
    constraints: Vec<Expr>,
}

impl FeatureModel {
    /// Validates the tree and constraints.
    pub fn new(root: Feature, constraints: Vec<Expr>) -> Result<FeatureModel, FmError> {
        if root.relation.is_some() {
            return Err(FmError::RootRelation(root.name.clone()));
        }
        let mut kinds: HashMap<&str, FeatureKind> = HashMap::new();
        for f in root.preorder() {
            if f.name.is_empty() {
                return Err(FmError::EmptyName);
            }
            if kinds.insert(&f.name, f.kind).is_some() {
                return Err(FmError::DuplicateName(f.name.clone()));
            }
            if f.group.is_some() && f.children.len() < 2 {
                return Err(FmError::GroupTooSmall(f.name.clone()));
            }
        }
        for (index, c) in constraints.iter().enumerate() {
            for r in c.references() {
                match kinds.get(r.name.as_str()) {
                    None => {
                        return Err(FmError::UnknownFeature {
                            index,
                            name: r.name.clone(),
                        })
                    }
                    Some(FeatureKind::Boolean) if r.static_part => {
                        return Err(FmError::NotTristate {
                            index,
                            name: r.name.clone(),
                        })
                    }
                    _ => {}
                }
            }
        }
        let mut root = root;
        normalize_relations(&mut root, true);
        Ok(FeatureModel { root, constraints })
    }

    pub fn root(&self) -> &Feature {
        &self.root
    }

    pub fn constraints(&self) -> &[Expr] {
        &self.constraints
    }

    /// All features in preorder, root first.
    pub fn features(&self) -> Preorder<'_> {
        self.root.preorder()
    }

    pub fn num_features(&self) -> usize {
        self.features().count()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features().map(|f| f.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Feature> {
        self.features().find(|f| f.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut doc = FeatureDoc::from(&self.root);
        doc.constraints = Some(self.constraints.iter().map(|c| c.to_string()).collect());
        serde_json::to_string_pretty(&doc).expect("feature model serializes")
    }
}

fn normalize_relations(f: &mut Feature, is_root: bool) {
    if !is_root && f.relation.is_none() {
        f.relation = Some(Relation::Optional);
    }
    for c in &mut f.children {
        normalize_relations(c, false);
    }
}

/// Cross-tree constraint ratio: distinct features mentioned in constraints
/// over all features.
pub fn ctcr(fm: &FeatureModel) -> f64 {
    let mentioned: BTreeSet<&str> = fm
        .constraints
        .iter()
        .flat_map(|c| c.feature_names())
        .collect();
    mentioned.len() as f64 / fm.num_features() as f64
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureDoc {
    name: String,
    #[serde(default, skip_serializing_if = "is_boolean")]
    kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relation: Option<Relation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group: Option<GroupKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<FeatureDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constraints: Option<Vec<String>>,
}

fn is_boolean(k: &FeatureKind) -> bool {
    *k == FeatureKind::Boolean
}

impl From<&Feature> for FeatureDoc {
    fn from(f: &Feature) -> Self {
        FeatureDoc {
            name: f.name.clone(),
            kind: f.kind,
            relation: f.relation,
            group: f.group,
            children: f.children.iter().map(FeatureDoc::from).collect(),
            constraints: None,
        }
    }
}

impl FeatureDoc {
    fn into_feature(self, is_root: bool) -> Result<Feature, FmError> {
        if !is_root && self.constraints.is_some() {
            return Err(FmError::NestedConstraints(self.name));
        }
        let children = self
            .children
            .into_iter()
            .map(|c| c.into_feature(false))
            .collect::<Result<_, _>>()?;
        Ok(Feature {
            name: self.name,
            kind: self.kind,
            relation: self.relation,
            group: self.group,
            children,
        })
    }
}

/// Reads a feature model from its JSON form.
pub fn parse_fm(text: &str) -> Result<FeatureModel, FmError> {
    let mut doc: FeatureDoc =
        serde_json::from_str(text).map_err(|e| FmError::Json(e.to_string()))?;
    let texts = doc.constraints.take().unwrap_or_default();
    let root = doc.into_feature(true)?;
    let constraints = texts
        .iter()
        .enumerate()
        .map(|(index, t)| Expr::parse(t).map_err(|source| FmError::Syntax { index, source }))
        .collect::<Result<Vec<_>, _>>()?;
    FeatureModel::new(root, constraints)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn car_with_radio() {
        let fm = parse_fm(r#"{"name":"Car","children":[{"name":"Radio","relation":"optional"}]}"#)
            .unwrap();
        assert_eq!(fm.num_features(), 2);
        assert_eq!(fm.get("Radio").unwrap().relation, Some(Relation::Optional));
        assert_eq!(fm.root().relation, None);
    }

    #[test]
    fn unknown_reference_is_rejected() {
        let doc = r#"{"name":"Car","children":[{"name":"B"}],"constraints":["A => B"]}"#;
        assert_eq!(
            parse_fm(doc),
            Err(FmError::UnknownFeature {
                index: 0,
                name: "A".into()
            })
        );
    }

    #[test]
    fn alternative_engine() {
        let doc = r#"{"name":"Car","children":[
            {"name":"Engine","relation":"mandatory","group":"alternative",
             "children":[{"name":"Gas"},{"name":"Electric"}]}]}"#;
        let fm = parse_fm(doc).unwrap();
        let groups: Vec<_> = fm.features().filter_map(|f| f.group).collect();
        assert_eq!(groups, vec![GroupKind::Alternative]);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_fm(r#"{"name":"R","children":[{"name":"A"},{"name":"A"}]}"#),
            Err(FmError::DuplicateName(_))
        ));
        assert!(matches!(
            parse_fm(r#"{"name":"R","group":"or","children":[{"name":"A"}]}"#),
            Err(FmError::GroupTooSmall(_))
        ));
        assert!(matches!(
            parse_fm(r#"{"name":"R","relation":"mandatory"}"#),
            Err(FmError::RootRelation(_))
        ));
        assert!(matches!(
            parse_fm(r#"{"name":"R","children":[{"name":"A"}],"constraints":["A'"]}"#),
            Err(FmError::NotTristate { .. })
        ));
        assert!(matches!(
            parse_fm(r#"{"name":"R","children":[{"name":"A","constraints":[]}]}"#),
            Err(FmError::NestedConstraints(_))
        ));
        assert!(matches!(
            parse_fm(r#"{"name":"R","colour":"red"}"#),
            Err(FmError::Json(_))
        ));
        assert!(matches!(
            parse_fm(r#"{"name":"R","children":[{"name":"A"}],"constraints":["A =>"]}"#),
            Err(FmError::Syntax { index: 0, .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let doc = r#"{"name":"R","children":[
            {"name":"A","kind":"tristate","group":"or","children":[{"name":"B"},{"name":"C","relation":"mandatory"}]}],
            "constraints":["A' => (B | !C)","B <=> C"]}"#;
        let fm = parse_fm(doc).unwrap();
        assert_eq!(parse_fm(&fm.to_json()).unwrap(), fm);
    }

    #[test]
    fn ctcr_examples() {
        let fm = parse_fm(r#"{"name":"R","children":[{"name":"A"},{"name":"B"},{"name":"C"}]}"#)
            .unwrap();
        assert_eq!(ctcr(&fm), 0.0);
        let fm = parse_fm(r#"{"name":"R","children":[{"name":"A"},{"name":"B"},{"name":"C"}],"constraints":["A => B","!B"]}"#)
            .unwrap();
        assert_eq!(ctcr(&fm), 0.5);
        let fm =
            parse_fm(r#"{"name":"R","children":[{"name":"A"}],"constraints":["R | A"]}"#).unwrap();
        assert_eq!(ctcr(&fm), 1.0);
    }
}
