use crate::action::{CompositeAction, CompositeActionSpace};
use crate::bayes::argmax;
use crate::losses::{decode_router, SeparatedScores};

/// Argmax over the composite action space; ties go to the smallest flat index.
pub fn decode_composite(scores: &[f64], space: CompositeActionSpace) -> CompositeAction {
    space.unflatten(argmax(scores)).expect("one score per composite action")
}

/// Routes on the sign of the router score, then executes the routed expert's
/// own query decision. Both thresholds are inclusive at zero.
pub fn decode_separated(s: SeparatedScores) -> CompositeAction {
    let expert = decode_router(s.router);
    CompositeAction::new(expert, usize::from(s.query[expert] >= 0.0))
}
