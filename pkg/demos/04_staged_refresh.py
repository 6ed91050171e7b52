"""Run a three-stage re-selection loop: each stage re-estimates ability
from fresh records and spends its budget on not-yet-selected samples."""

from zpdselect import (
    CarryOver,
    RefreshState,
    SynthSpec,
    Uniform,
    generate_population,
    refresh,
)

# Simulate a model that improves between stages: the same item bank,
# re-answered at a higher true ability each time. In production these
# record files would come from re-probing the current checkpoint.
stage_abilities = (-0.5, 0.2, 0.9)
stage_records = []
for stage, theta_star in enumerate(stage_abilities):
    b_star, records = generate_population(
        SynthSpec(
            n_items=600,
            theta_star=theta_star,
            difficulty_dist=Uniform(-3, 3),
            seed=100 + stage,
        )
    )
    stage_records.append(records)

state = RefreshState()
print("policy: exclude_previous (each stage selects new samples)")
print(f"{'stage':>5} {'true theta':>10} {'estimated':>10} {'k':>4} {'history':>8}")
for stage, records in enumerate(stage_records):
    selection, state = refresh(state, records, 0.1, CarryOver.EXCLUDE_PREVIOUS)
    print(
        f"{stage + 1:5d} {stage_abilities[stage]:10.2f} "
        f"{state.theta_history[-1]:10.3f} {selection.k:4d} "
        f"{len(state.selected_history):8d}"
    )

# The estimated trajectory tracks the true abilities, and the history
# grows by exactly k per stage because selections never overlap.

print()
print(f"ability trajectory: {tuple(round(t, 3) for t in state.theta_history)}")
assert len(state.selected_history) == 3 * 60

# Under allow_repeat the same records give the same selection twice;
# nothing is excluded, so a stalled model re-trains on the same band.
state2 = RefreshState()
first, state2 = refresh(state2, stage_records[0], 0.1, CarryOver.ALLOW_REPEAT)
second, state2 = refresh(state2, stage_records[0], 0.1, CarryOver.ALLOW_REPEAT)
print()
print(f"allow_repeat, identical records: same selection twice -> {first == second}")
