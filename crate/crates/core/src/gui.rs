//! GUI hierarchy model: attributed element trees, structural queries, and
//! selector matching.
//!
//! A screen is a [`HierarchyTree`] of [`GuiElement`] nodes. Nodes are
//! addressed by [`NodePath`], the sequence of child indices from the root,
//! so a path doubles as a stable node id for a given tree shape.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One element of a GUI hierarchy.
///
/// `text` is the only mutable attribute at runtime (editable fields and
/// labels updated by app effects); everything else is fixed per screen
/// definition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuiElement {
    #[serde(rename = "class")]
    pub class_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_desc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_id: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub clickable: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub editable: bool,
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub displayed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<GuiElement>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_true(b: &bool) -> bool {
    *b
}

fn default_true() -> bool {
    true
}

impl GuiElement {
    /// A bare, invisible-by-default-off container node. Convenience for
    /// tests and fixtures built in code.
    pub fn new(class_name: impl Into<String>) -> Self {
        GuiElement {
            class_name: class_name.into(),
            text: None,
            content_desc: None,
            resource_id: None,
            clickable: false,
            editable: false,
            displayed: true,
            children: Vec::new(),
        }
    }

    /// The value of one textual feature, if present and non-empty.
    pub fn feature(&self, kind: FeatureKind) -> Option<&str> {
        let value = match kind {
            FeatureKind::Text => self.text.as_deref(),
            FeatureKind::ContentDesc => self.content_desc.as_deref(),
            FeatureKind::ResourceId => self.resource_id.as_deref(),
        };
        value.filter(|v| !v.is_empty())
    }

    /// First non-empty textual feature in priority order
    /// text > content_desc > resource_id.
    pub fn first_feature(&self) -> Option<(FeatureKind, &str)> {
        FeatureKind::PRIORITY
            .iter()
            .find_map(|&kind| self.feature(kind).map(|v| (kind, v)))
    }

    /// Snapshot of the three textual features.
    pub fn features(&self) -> ElementFeatures {
        ElementFeatures {
            text: self.text.clone(),
            content_desc: self.content_desc.clone(),
            resource_id: self.resource_id.clone(),
        }
    }
}

/// The three textual features an element can carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Text,
    ContentDesc,
    ResourceId,
}

impl FeatureKind {
    /// Priority order used whenever a single feature has to stand in for
    /// an element: text > content_desc > resource_id.
    pub const PRIORITY: [FeatureKind; 3] = [
        FeatureKind::Text,
        FeatureKind::ContentDesc,
        FeatureKind::ResourceId,
    ];

    /// The selector criterion that locates an element by this feature.
    pub fn criterion_name(self) -> CriterionName {
        match self {
            FeatureKind::Text => CriterionName::WithText,
            FeatureKind::ContentDesc => CriterionName::WithContentDescription,
            FeatureKind::ResourceId => CriterionName::WithId,
        }
    }
}

/// Detached copy of a node's textual features.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementFeatures {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_desc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_id: Option<String>,
}

impl ElementFeatures {
    /// Same lookup rule as [`GuiElement::feature`].
    pub fn feature(&self, kind: FeatureKind) -> Option<&str> {
        let value = match kind {
            FeatureKind::Text => self.text.as_deref(),
            FeatureKind::ContentDesc => self.content_desc.as_deref(),
            FeatureKind::ResourceId => self.resource_id.as_deref(),
        };
        value.filter(|v| !v.is_empty())
    }

    /// All non-empty feature values, in priority order.
    pub fn values(&self) -> Vec<&str> {
        FeatureKind::PRIORITY
            .iter()
            .filter_map(|&kind| self.feature(kind))
            .collect()
    }
}

/// Path from the root to a node: the child index taken at each level.
/// The root is the empty path. Path length equals node depth.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// Position among immediate siblings; the root has index 0.
    pub fn index(&self) -> usize {
        self.0.last().copied().unwrap_or(0)
    }

    pub fn parent(&self) -> Option<NodePath> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodePath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, index: usize) -> NodePath {
        let mut segments = self.0.clone();
        segments.push(index);
        NodePath(segments)
    }

    /// Length of the shared prefix with another path: the depth of the
    /// lowest common ancestor.
    pub fn common_prefix_len(&self, other: &NodePath) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }
}

impl std::fmt::Display for NodePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "/");
        }
        for segment in &self.0 {
            write!(f, "/{segment}")?;
        }
        Ok(())
    }
}

/// One screen blueprint. Wraps the root element; depth, index, and
/// ancestors are derived from paths rather than stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HierarchyTree {
    pub root: GuiElement,
}

impl HierarchyTree {
    pub fn new(root: GuiElement) -> Self {
        HierarchyTree { root }
    }

    /// Resolve a path to its node.
    pub fn get(&self, path: &NodePath) -> Option<&GuiElement> {
        let mut node = &self.root;
        for &index in &path.0 {
            node = node.children.get(index)?;
        }
        Some(node)
    }

    pub fn get_mut(&mut self, path: &NodePath) -> Option<&mut GuiElement> {
        let mut node = &mut self.root;
        for &index in &path.0 {
            node = node.children.get_mut(index)?;
        }
        Some(node)
    }

    /// Preorder walk over every node, document order.
    pub fn walk(&self) -> Walk<'_> {
        Walk {
            stack: vec![(NodePath::root(), &self.root)],
        }
    }

    /// All displayed nodes matching the selector, in document order.
    ///
    /// `with_text` and `with_content_description` compare by exact,
    /// case-sensitive string equality. `with_id` matches when the node's
    /// resource id equals the criterion value or ends with `"/" + value`,
    /// so both full ids (`app.pkg:id/text1`) and the abbreviated tokens
    /// test scripts use resolve.
    pub fn find_elements(&self, selector: &Selector) -> Vec<NodePath> {
        self.walk()
            .filter(|(_, node)| node.displayed && selector.matches(node))
            .map(|(path, _)| path)
            .collect()
    }

    /// Depth, sibling index, and root-first ancestor chain of a node.
    pub fn structural_info(&self, path: &NodePath) -> Result<StructuralInfo, StructuralError> {
        if self.get(path).is_none() {
            return Err(StructuralError::NotInTree(path.clone()));
        }
        let ancestors = (0..path.0.len())
            .map(|len| NodePath(path.0[..len].to_vec()))
            .collect();
        Ok(StructuralInfo {
            depth: path.depth(),
            index: path.index(),
            ancestors,
        })
    }
}

/// Iterator state for [`HierarchyTree::walk`].
pub struct Walk<'a> {
    stack: Vec<(NodePath, &'a GuiElement)>,
}

impl<'a> Iterator for Walk<'a> {
    type Item = (NodePath, &'a GuiElement);

    fn next(&mut self) -> Option<Self::Item> {
        let (path, node) = self.stack.pop()?;
        for (i, child) in node.children.iter().enumerate().rev() {
            self.stack.push((path.child(i), child));
        }
        Some((path, node))
    }
}

/// Structural position of a node inside its tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuralInfo {
    pub depth: usize,
    pub index: usize,
    /// Paths of the ancestors, root first. Empty for the root itself.
    pub ancestors: Vec<NodePath>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructuralError {
    #[error("node {0} is not part of this tree")]
    NotInTree(NodePath),
}

/// How many criteria a selector combines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchType {
    /// Exactly one criterion.
    Single,
    /// Conjunction of two or more criteria.
    AllOf,
}

/// One matching condition on an element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: CriterionName,
    pub value: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionName {
    WithText,
    WithContentDescription,
    WithId,
}

impl Criterion {
    fn matches(&self, node: &GuiElement) -> bool {
        match self.name {
            CriterionName::WithText => node.text.as_deref() == Some(self.value.as_str()),
            CriterionName::WithContentDescription => {
                node.content_desc.as_deref() == Some(self.value.as_str())
            }
            CriterionName::WithId => match node.resource_id.as_deref() {
                Some(id) => id == self.value || id.ends_with(&format!("/{}", self.value)),
                None => false,
            },
        }
    }
}

/// Element search specification: a single criterion or an `all_of`
/// conjunction of at least two.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selector {
    pub search_type: SearchType,
    pub criteria: Vec<Criterion>,
}

impl Selector {
    pub fn single(name: CriterionName, value: impl Into<String>) -> Self {
        Selector {
            search_type: SearchType::Single,
            criteria: vec![Criterion {
                name,
                value: value.into(),
            }],
        }
    }

    pub fn all_of(criteria: Vec<Criterion>) -> Self {
        Selector {
            search_type: SearchType::AllOf,
            criteria,
        }
    }

    /// Arity check: `single` carries exactly one criterion, `all_of` at
    /// least two.
    pub fn validate(&self) -> Result<(), SelectorError> {
        match self.search_type {
            SearchType::Single if self.criteria.len() != 1 => Err(SelectorError::BadArity {
                search_type: SearchType::Single,
                got: self.criteria.len(),
            }),
            SearchType::AllOf if self.criteria.len() < 2 => Err(SelectorError::BadArity {
                search_type: SearchType::AllOf,
                got: self.criteria.len(),
            }),
            _ => Ok(()),
        }
    }

    /// True when every criterion holds for the node. Display state is
    /// checked by the tree search, not here.
    pub fn matches(&self, node: &GuiElement) -> bool {
        self.criteria.iter().all(|c| c.matches(node))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectorError {
    #[error("{search_type:?} selector with {got} criteria")]
    BadArity { search_type: SearchType, got: usize },
}
