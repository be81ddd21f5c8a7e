"""Classical (micro-AIXI) and quantum agents and their interaction protocols."""

from .aixi import (
    CagiAgent,
    MixtureState,
    PolicyConfig,
    action_values,
    aixi_policy,
    posterior_update,
    prior_weights,
)
from .environment import EnvironmentModel, History, Step, load_environment_class
from .learning import (
    CoherentLearnResult,
    VariationalResult,
    coherent_learn_check,
    variational_learn,
)
from .protocols import (
    InteractionTrace,
    QuantumEnvironment,
    StepRecord,
    run_cagi_classical,
    run_cagi_quantum,
    run_qagi_classical,
    run_qagi_quantum,
)
from .qagi import (
    InstrumentAction,
    QagiAgent,
    QagiStepResult,
    UnitaryAction,
    identity_update,
    qagi_step,
    reencode_update,
    table_update,
)
