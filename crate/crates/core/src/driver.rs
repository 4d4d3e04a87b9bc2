//! Deterministic stand-in for a device driver: loads a declarative
//! [`AppModel`], keeps per-screen state, and executes click/input events.
//!
//! The model file format is JSON with top-level keys
//! `{"name","initial_screen","screens","transitions"}`. Screens map ids to
//! hierarchy trees in the node-object form of [`crate::gui::GuiElement`];
//! effects are single-key objects such as `{"goto":"settings"}` or
//! `{"set_text":{"selector":…,"value":"${input}"}}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gui::{GuiElement, HierarchyTree, NodePath, Selector};

/// Placeholder substituted with the typed value inside effect templates of
/// input transitions.
pub const INPUT_PLACEHOLDER: &str = "${input}";

/// Declarative simulated app: screens plus the transitions between them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppModel {
    pub name: String,
    pub initial_screen: String,
    pub screens: BTreeMap<String, HierarchyTree>,
    pub transitions: Vec<Transition>,
}

/// What the app does when a specific element on a specific screen receives
/// an action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transition {
    pub screen: String,
    pub selector: Selector,
    pub action: ActionKind,
    pub effects: Vec<Effect>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Click,
    Input,
}

/// One state change. Applied in order; selector-bearing effects resolve on
/// the screen that is current when the effect runs, so a `goto` redirects
/// the effects after it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Goto(String),
    SetText { selector: Selector, value: String },
    AppendChild { selector: Selector, node: GuiElement },
    RemoveNode { selector: Selector },
}

impl AppModel {
    pub fn from_json(json: &str) -> Result<AppModel, ModelError> {
        let model: AppModel = serde_json::from_str(json).map_err(ModelError::Json)?;
        model.validate()?;
        Ok(model)
    }

    /// Checks every screen reference and selector; reports all problems at
    /// once rather than the first.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut problems = Vec::new();
        if !self.screens.contains_key(&self.initial_screen) {
            problems.push(format!(
                "initial_screen \"{}\" is not a declared screen",
                self.initial_screen
            ));
        }
        for (i, transition) in self.transitions.iter().enumerate() {
            if !self.screens.contains_key(&transition.screen) {
                problems.push(format!(
                    "transition {i}: source screen \"{}\" is not declared",
                    transition.screen
                ));
            }
            if let Err(e) = transition.selector.validate() {
                problems.push(format!("transition {i}: {e}"));
            }
            for effect in &transition.effects {
                match effect {
                    Effect::Goto(target) => {
                        if !self.screens.contains_key(target) {
                            problems.push(format!(
                                "transition {i}: goto target \"{target}\" is not declared"
                            ));
                        }
                    }
                    Effect::SetText { selector, .. }
                    | Effect::AppendChild { selector, .. }
                    | Effect::RemoveNode { selector } => {
                        if let Err(e) = selector.validate() {
                            problems.push(format!("transition {i}: effect selector: {e}"));
                        }
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(problems))
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model JSON: {0}")]
    Json(#[source] serde_json::Error),
    #[error("invalid model:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// Action passed to [`DriverSession::perform`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerformAction {
    Click,
    Input(String),
}

impl PerformAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            PerformAction::Click => ActionKind::Click,
            PerformAction::Input(_) => ActionKind::Input,
        }
    }
}

/// Errors an event execution can produce. Any of these leaves the session
/// state untouched.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ExecutionError {
    #[error("no displayed element matches {0:?} on screen \"{1}\"")]
    ElementNotFound(Selector, String),
    #[error("{count} elements match {selector:?} on screen \"{screen}\"")]
    AmbiguousMatch {
        selector: Selector,
        screen: String,
        count: usize,
    },
    #[error("element {0} is not clickable")]
    NotClickable(NodePath),
    #[error("element {0} is not editable")]
    NotEditable(NodePath),
    #[error("effect failed on screen \"{screen}\": {reason}")]
    EffectFailed { screen: String, reason: String },
}

/// A running app instance. Single-owner; spin up one session per parallel
/// exploration.
#[derive(Clone, Debug)]
pub struct DriverSession {
    model: AppModel,
    current_screen: String,
    working: BTreeMap<String, HierarchyTree>,
}

/// Validate the model and start a session at its initial screen.
pub fn launch(model: AppModel) -> Result<DriverSession, ModelError> {
    model.validate()?;
    let working = model.screens.clone();
    let current_screen = model.initial_screen.clone();
    Ok(DriverSession {
        model,
        current_screen,
        working,
    })
}

impl DriverSession {
    pub fn model(&self) -> &AppModel {
        &self.model
    }

    pub fn current_screen(&self) -> &str {
        &self.current_screen
    }

    /// Snapshot of the current screen's tree. Mutating the copy does not
    /// affect the session.
    pub fn current_tree(&self) -> HierarchyTree {
        self.working[&self.current_screen].clone()
    }

    /// Restore the working trees and current screen to a fresh launch.
    /// Idempotent.
    pub fn reset(&mut self) {
        self.working = self.model.screens.clone();
        self.current_screen = self.model.initial_screen.clone();
    }

    /// Execute one event. The selector must resolve to exactly one
    /// displayed element of the current screen; clicks need a clickable
    /// target, inputs an editable one. State changes are transactional:
    /// on any error the session is exactly as before.
    pub fn perform(
        &mut self,
        selector: &Selector,
        action: &PerformAction,
    ) -> Result<(), ExecutionError> {
        let screen = self.current_screen.clone();
        let tree = &self.working[&screen];
        let matches = tree.find_elements(selector);
        let path = match matches.len() {
            0 => return Err(ExecutionError::ElementNotFound(selector.clone(), screen)),
            1 => matches.into_iter().next().unwrap(),
            n => {
                return Err(ExecutionError::AmbiguousMatch {
                    selector: selector.clone(),
                    screen,
                    count: n,
                })
            }
        };
        let node = tree.get(&path).expect("path from find_elements");
        match action {
            PerformAction::Click if !node.clickable => {
                return Err(ExecutionError::NotClickable(path))
            }
            PerformAction::Input(_) if !node.editable => {
                return Err(ExecutionError::NotEditable(path))
            }
            _ => {}
        }

        // Stage the whole mutation on a copy so a failing effect rolls the
        // event back to nothing.
        let mut staged_working = self.working.clone();
        let mut staged_screen = screen.clone();

        let input_value = match action {
            PerformAction::Input(value) => {
                let node = staged_working
                    .get_mut(&staged_screen)
                    .and_then(|t| t.get_mut(&path))
                    .expect("path resolved above");
                node.text = Some(value.clone());
                Some(value.as_str())
            }
            PerformAction::Click => None,
        };

        let transition = self.model.transitions.iter().find(|t| {
            t.screen == screen
                && t.action == action.kind()
                && self.working[&screen].find_elements(&t.selector) == [path.clone()]
        });
        if let Some(transition) = transition {
            for effect in &transition.effects {
                apply_effect(&mut staged_working, &mut staged_screen, effect, input_value)?;
            }
        }

        self.working = staged_working;
        self.current_screen = staged_screen;
        Ok(())
    }
}

fn substitute(template: &str, input_value: Option<&str>) -> String {
    match input_value {
        Some(value) => template.replace(INPUT_PLACEHOLDER, value),
        None => template.to_string(),
    }
}

fn substitute_node(template: &GuiElement, input_value: Option<&str>) -> GuiElement {
    let mut node = template.clone();
    node.text = node.text.map(|t| substitute(&t, input_value));
    node.content_desc = node.content_desc.map(|t| substitute(&t, input_value));
    node.resource_id = node.resource_id.map(|t| substitute(&t, input_value));
    node.children = node
        .children
        .iter()
        .map(|c| substitute_node(c, input_value))
        .collect();
    node
}

fn apply_effect(
    working: &mut BTreeMap<String, HierarchyTree>,
    current_screen: &mut String,
    effect: &Effect,
    input_value: Option<&str>,
) -> Result<(), ExecutionError> {
    let effect_failed = |screen: &str, reason: String| ExecutionError::EffectFailed {
        screen: screen.to_string(),
        reason,
    };
    match effect {
        Effect::Goto(target) => {
            // Targets were validated at launch.
            *current_screen = target.clone();
            Ok(())
        }
        Effect::SetText { selector, value } => {
            let path = resolve_unique(working, current_screen, selector)?;
            let tree = working.get_mut(current_screen.as_str()).unwrap();
            let node = tree.get_mut(&path).unwrap();
            node.text = Some(substitute(value, input_value));
            Ok(())
        }
        Effect::AppendChild { selector, node } => {
            let path = resolve_unique(working, current_screen, selector)?;
            let tree = working.get_mut(current_screen.as_str()).unwrap();
            let parent = tree.get_mut(&path).unwrap();
            parent.children.push(substitute_node(node, input_value));
            Ok(())
        }
        Effect::RemoveNode { selector } => {
            let path = resolve_unique(working, current_screen, selector)?;
            let parent_path = path.parent().ok_or_else(|| {
                effect_failed(current_screen, "remove_node cannot remove the root".into())
            })?;
            let tree = working.get_mut(current_screen.as_str()).unwrap();
            let parent = tree.get_mut(&parent_path).unwrap();
            parent.children.remove(path.index());
            Ok(())
        }
    }
}

fn resolve_unique(
    working: &BTreeMap<String, HierarchyTree>,
    screen: &str,
    selector: &Selector,
) -> Result<NodePath, ExecutionError> {
    let matches = working[screen].find_elements(selector);
    match matches.len() {
        1 => Ok(matches.into_iter().next().unwrap()),
        n => Err(ExecutionError::EffectFailed {
            screen: screen.to_string(),
            reason: format!("effect selector {selector:?} matched {n} elements"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gui::CriterionName;

    fn two_screen_model() -> AppModel {
        let json = r#"{
            "name": "demo",
            "initial_screen": "main",
            "screens": {
                "main": {
                    "class": "FrameLayout",
                    "children": [
                        {"class": "Button", "text": "Go", "clickable": true},
                        {"class": "EditText", "resource_id": "demo:id/field", "text": "", "editable": true},
                        {"class": "TextView", "resource_id": "demo:id/echo", "text": "none"}
                    ]
                },
                "second": {
                    "class": "FrameLayout",
                    "children": [{"class": "TextView", "text": "Second screen"}]
                }
            },
            "transitions": [
                {
                    "screen": "main",
                    "selector": {"search_type": "single", "criteria": [{"name": "with_text", "value": "Go"}]},
                    "action": "click",
                    "effects": [{"goto": "second"}]
                },
                {
                    "screen": "main",
                    "selector": {"search_type": "single", "criteria": [{"name": "with_id", "value": "field"}]},
                    "action": "input",
                    "effects": [{"set_text": {"selector": {"search_type": "single", "criteria": [{"name": "with_id", "value": "echo"}]}, "value": "${input}"}}]
                }
            ]
        }"#;
        AppModel::from_json(json).unwrap()
    }

    fn text_sel(value: &str) -> Selector {
        Selector::single(CriterionName::WithText, value)
    }

    #[test]
    fn launch_starts_at_initial_screen() {
        let session = launch(two_screen_model()).unwrap();
        assert_eq!(session.current_screen(), "main");
        assert_eq!(
            session.current_tree(),
            session.model().screens["main"].clone()
        );
    }

    #[test]
    fn launch_single_empty_screen() {
        let model = AppModel {
            name: "tiny".into(),
            initial_screen: "only".into(),
            screens: BTreeMap::from([(
                "only".to_string(),
                HierarchyTree::new(GuiElement::new("FrameLayout")),
            )]),
            transitions: vec![],
        };
        let session = launch(model).unwrap();
        assert!(session.current_tree().root.children.is_empty());
    }

    #[test]
    fn dangling_goto_fails_validation_with_name() {
        let mut model = two_screen_model();
        model.transitions[0].effects = vec![Effect::Goto("nowhere".into())];
        match launch(model) {
            Err(ModelError::Invalid(problems)) => {
                assert!(problems.iter().any(|p| p.contains("nowhere")), "{problems:?}");
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn validation_collects_every_broken_reference() {
        let mut model = two_screen_model();
        model.initial_screen = "ghost".into();
        model.transitions[0].effects = vec![Effect::Goto("nowhere".into())];
        model.transitions[1].screen = "phantom".into();
        match model.validate() {
            Err(ModelError::Invalid(problems)) => {
                assert_eq!(problems.len(), 3, "{problems:?}");
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn click_transitions_to_second_screen() {
        let mut session = launch(two_screen_model()).unwrap();
        session.perform(&text_sel("Go"), &PerformAction::Click).unwrap();
        assert_eq!(session.current_screen(), "second");
    }

    #[test]
    fn unmatched_selector_is_an_error_without_state_change() {
        let mut session = launch(two_screen_model()).unwrap();
        let before = session.current_tree();
        let err = session
            .perform(&text_sel("Missing"), &PerformAction::Click)
            .unwrap_err();
        assert!(matches!(err, ExecutionError::ElementNotFound(..)));
        assert_eq!(session.current_screen(), "main");
        assert_eq!(session.current_tree(), before);
    }

    #[test]
    fn input_sets_text_and_fires_effect() {
        let mut session = launch(two_screen_model()).unwrap();
        session
            .perform(
                &Selector::single(CriterionName::WithId, "field"),
                &PerformAction::Input("20".into()),
            )
            .unwrap();
        let tree = session.current_tree();
        let field = tree
            .find_elements(&Selector::single(CriterionName::WithId, "field"))
            .pop()
            .unwrap();
        assert_eq!(tree.get(&field).unwrap().text.as_deref(), Some("20"));
        let echo = tree
            .find_elements(&Selector::single(CriterionName::WithId, "echo"))
            .pop()
            .unwrap();
        assert_eq!(tree.get(&echo).unwrap().text.as_deref(), Some("20"));
    }

    #[test]
    fn input_on_non_editable_is_rejected() {
        let mut session = launch(two_screen_model()).unwrap();
        let err = session
            .perform(&text_sel("Go"), &PerformAction::Input("x".into()))
            .unwrap_err();
        assert!(matches!(err, ExecutionError::NotEditable(_)));
    }

    #[test]
    fn click_on_non_clickable_is_rejected() {
        let mut session = launch(two_screen_model()).unwrap();
        let err = session
            .perform(
                &Selector::single(CriterionName::WithId, "echo"),
                &PerformAction::Click,
            )
            .unwrap_err();
        assert!(matches!(err, ExecutionError::NotClickable(_)));
    }

    #[test]
    fn inert_click_is_a_no_op_success() {
        let json_model = two_screen_model();
        let mut model = json_model;
        model.transitions.clear();
        let mut session = launch(model).unwrap();
        let before = session.current_tree();
        session.perform(&text_sel("Go"), &PerformAction::Click).unwrap();
        assert_eq!(session.current_tree(), before);
    }

    #[test]
    fn reset_restores_launch_state_and_is_idempotent() {
        let mut session = launch(two_screen_model()).unwrap();
        let launch_tree = session.current_tree();
        session
            .perform(
                &Selector::single(CriterionName::WithId, "field"),
                &PerformAction::Input("dirty".into()),
            )
            .unwrap();
        session.perform(&text_sel("Go"), &PerformAction::Click).unwrap();
        session.reset();
        assert_eq!(session.current_screen(), "main");
        assert_eq!(session.current_tree(), launch_tree);
        session.reset();
        assert_eq!(session.current_tree(), launch_tree);
    }

    #[test]
    fn replay_after_reset_reproduces_final_tree() {
        let mut session = launch(two_screen_model()).unwrap();
        let run = |s: &mut DriverSession| {
            s.perform(
                &Selector::single(CriterionName::WithId, "field"),
                &PerformAction::Input("42".into()),
            )
            .unwrap();
            s.perform(&text_sel("Go"), &PerformAction::Click).unwrap();
            s.current_tree()
        };
        let first = run(&mut session);
        session.reset();
        let second = run(&mut session);
        assert_eq!(first, second);
    }

    #[test]
    fn per_screen_state_persists_across_navigation() {
        let mut model = two_screen_model();
        // second screen gets a way back
        model.transitions.push(Transition {
            screen: "second".into(),
            selector: text_sel("Second screen"),
            action: ActionKind::Click,
            effects: vec![Effect::Goto("main".into())],
        });
        if let Some(node) = model.screens.get_mut("second") {
            node.root.children[0].clickable = true;
        }
        let mut session = launch(model).unwrap();
        session
            .perform(
                &Selector::single(CriterionName::WithId, "field"),
                &PerformAction::Input("kept".into()),
            )
            .unwrap();
        session.perform(&text_sel("Go"), &PerformAction::Click).unwrap();
        session
            .perform(&text_sel("Second screen"), &PerformAction::Click)
            .unwrap();
        let tree = session.current_tree();
        let field = tree
            .find_elements(&Selector::single(CriterionName::WithId, "field"))
            .pop()
            .unwrap();
        assert_eq!(tree.get(&field).unwrap().text.as_deref(), Some("kept"));
    }

    #[test]
    fn ambiguous_match_is_rejected() {
        let mut model = two_screen_model();
        if let Some(screen) = model.screens.get_mut("main") {
            let mut dup = GuiElement::new("Button");
            dup.text = Some("Go".into());
            dup.clickable = true;
            screen.root.children.push(dup);
        }
        let mut session = launch(model).unwrap();
        let err = session
            .perform(&text_sel("Go"), &PerformAction::Click)
            .unwrap_err();
        assert!(matches!(err, ExecutionError::AmbiguousMatch { count: 2, .. }));
    }

    #[test]
    fn failing_effect_rolls_back_the_whole_event() {
        let mut model = two_screen_model();
        // input effect now targets a selector that matches nothing
        model.transitions[1].effects = vec![Effect::SetText {
            selector: Selector::single(CriterionName::WithId, "ghost"),
            value: "${input}".into(),
        }];
        let mut session = launch(model).unwrap();
        let before = session.current_tree();
        let err = session
            .perform(
                &Selector::single(CriterionName::WithId, "field"),
                &PerformAction::Input("20".into()),
            )
            .unwrap_err();
        assert!(matches!(err, ExecutionError::EffectFailed { .. }));
        // even the typed text is rolled back
        assert_eq!(session.current_tree(), before);
    }

    #[test]
    fn append_and_remove_effects() {
        let mut model = two_screen_model();
        model.transitions[1].effects = vec![
            Effect::AppendChild {
                selector: Selector::single(CriterionName::WithId, "echo"),
                node: GuiElement {
                    text: Some("item: ${input}".into()),
                    ..GuiElement::new("TextView")
                },
            },
            Effect::RemoveNode {
                selector: text_sel("Go"),
            },
        ];
        let mut session = launch(model).unwrap();
        session
            .perform(
                &Selector::single(CriterionName::WithId, "field"),
                &PerformAction::Input("new item".into()),
            )
            .unwrap();
        let tree = session.current_tree();
        assert_eq!(tree.find_elements(&text_sel("item: new item")).len(), 1);
        assert!(tree.find_elements(&text_sel("Go")).is_empty());
    }
}
