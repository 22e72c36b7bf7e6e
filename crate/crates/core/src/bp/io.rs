//! JSON persistence and DOT export for branching programs.

use serde::{Deserialize, Serialize};

use crate::tree::{TepVariant, Value};

use super::{
    BpError, BpVariant, BranchingProgram, RawEdge, State, StateId, StateLabel, StateTag,
};

#[derive(Serialize, Deserialize)]
struct LabelFile {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    node: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    id: StateId,
    label: LabelFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    tag: Option<StateTag>,
}

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    from: StateId,
    to: StateId,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<Value>,
}

#[derive(Serialize, Deserialize)]
struct BpFile {
    h: u32,
    k: u32,
    variant: BpVariant,
    problem: TepVariant,
    start: StateId,
    states: Vec<StateFile>,
    edges: Vec<EdgeFile>,
}

fn label_to_file(label: &StateLabel) -> LabelFile {
    let mut file = LabelFile {
        kind: String::new(),
        node: None,
        x: None,
        y: None,
        value: None,
    };
    match *label {
        StateLabel::Leaf { node } => {
            file.kind = "leaf".into();
            file.node = Some(node);
        }
        StateLabel::Func { node, x, y } => {
            file.kind = "func".into();
            file.node = Some(node);
            file.x = Some(x);
            file.y = Some(y);
        }
        StateLabel::Guess => file.kind = "guess".into(),
        StateLabel::Final { value } => {
            file.kind = "final".into();
            file.value = Some(value);
        }
        StateLabel::Accept => file.kind = "accept".into(),
    }
    file
}

fn label_from_file(file: &LabelFile) -> Result<StateLabel, BpError> {
    let need = |opt: Option<usize>| opt.ok_or_else(|| BpError::Parse("missing node".into()));
    Ok(match file.kind.as_str() {
        "leaf" => StateLabel::Leaf { node: need(file.node)? },
        "func" => StateLabel::Func {
            node: need(file.node)?,
            x: file.x.ok_or_else(|| BpError::Parse("func label needs x".into()))?,
            y: file.y.ok_or_else(|| BpError::Parse("func label needs y".into()))?,
        },
        "guess" => StateLabel::Guess,
        "final" => StateLabel::Final {
            value: file
                .value
                .ok_or_else(|| BpError::Parse("final label needs value".into()))?,
        },
        "accept" => StateLabel::Accept,
        other => return Err(BpError::Parse(format!("unknown label kind {other}"))),
    })
}

impl BranchingProgram {
    pub fn to_json(&self) -> String {
        let states = self
            .states()
            .iter()
            .map(|s| StateFile {
                id: s.id,
                label: label_to_file(&s.label),
                tag: s.tag.clone(),
            })
            .collect();
        let edges = self
            .edges()
            .iter()
            .map(|e| EdgeFile {
                from: self.state(e.from).id,
                to: self.state(e.to).id,
                label: e.label,
            })
            .collect();
        let file = BpFile {
            h: self.h(),
            k: self.k(),
            variant: self.variant(),
            problem: self.problem(),
            start: self.state(self.start()).id,
            states,
            edges,
        };
        serde_json::to_string(&file).expect("program serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, BpError> {
        let file: BpFile =
            serde_json::from_str(text).map_err(|e| BpError::Parse(e.to_string()))?;
        let mut states = Vec::with_capacity(file.states.len());
        for s in &file.states {
            states.push(State {
                id: s.id,
                label: label_from_file(&s.label)?,
                tag: s.tag.clone(),
            });
        }
        let edges = file
            .edges
            .iter()
            .map(|e| RawEdge {
                from: e.from,
                to: e.to,
                label: e.label,
            })
            .collect();
        BranchingProgram::new(
            file.h,
            file.k,
            file.variant,
            file.problem,
            file.start,
            states,
            edges,
        )
    }
}

/// Graphviz rendering: query states as ellipses labelled by their query,
/// the accepting state as a double circle, final states as boxes.
pub fn dot_export(bp: &BranchingProgram) -> String {
    let mut out = String::from("digraph bp {\n  rankdir=TB;\n");
    for state in bp.states() {
        let (shape, label) = match &state.label {
            StateLabel::Accept => ("doublecircle", "acc".to_string()),
            StateLabel::Final { value } => ("box", format!("{value}")),
            StateLabel::Guess => ("diamond", "?".to_string()),
            other => ("ellipse", other.to_string()),
        };
        out.push_str(&format!(
            "  s{} [shape={shape}, label=\"{}\"];\n",
            state.id, label
        ));
    }
    for edge in bp.edges() {
        let from = bp.state(edge.from).id;
        let to = bp.state(edge.to).id;
        match edge.label {
            Some(v) => out.push_str(&format!("  s{from} -> s{to} [label=\"{v}\"];\n")),
            None => out.push_str(&format!("  s{from} -> s{to};\n")),
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_bp() -> BranchingProgram {
        let states = vec![
            State {
                id: 0,
                label: StateLabel::Leaf { node: 2 },
                tag: Some(StateTag {
                    layer: 1,
                    ..Default::default()
                }),
            },
            State {
                id: 1,
                label: StateLabel::Func { node: 1, x: 0, y: 1 },
                tag: None,
            },
            State {
                id: 2,
                label: StateLabel::Accept,
                tag: None,
            },
        ];
        let edges = vec![
            RawEdge {
                from: 0,
                to: 1,
                label: Some(0),
            },
            RawEdge {
                from: 0,
                to: 1,
                label: Some(1),
            },
            RawEdge {
                from: 1,
                to: 2,
                label: Some(1),
            },
        ];
        BranchingProgram::new(
            2,
            2,
            BpVariant::Nondeterministic,
            TepVariant::Bt,
            0,
            states,
            edges,
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_is_identity() {
        let bp = sample_bp();
        let text = bp.to_json();
        let back = BranchingProgram::from_json(&text).unwrap();
        assert_eq!(back, bp);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn missing_start_is_a_parse_error() {
        let text = r#"{"h":2,"k":2,"variant":"nondeterministic","problem":"BT","states":[],"edges":[]}"#;
        assert!(matches!(
            BranchingProgram::from_json(text),
            Err(BpError::Parse(_))
        ));
    }

    #[test]
    fn dot_renders_every_state() {
        let bp = sample_bp();
        let dot = dot_export(&bp);
        assert_eq!(dot.matches("shape=").count(), 3);
        assert_eq!(dot.matches(" -> ").count(), 3);
    }
}
