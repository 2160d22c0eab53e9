from django.conf import settings
from rest_framework import serializers

from core.serializers import PhysicalParamsSerializer, StrictSerializer
from gpe.fields import BASES
from gpe.kinetic import SCHEMES
from moments.generator import COEFFICIENT_MODES, GROUPINGS
from perturbation.coefficients import VARIANTS

# Pipelines a run or a sweep point can execute.
TARGETS = ("two-mode", "hydro", "gpe", "moments", "dephasing", "oracle")
SUBCOMMANDS = TARGETS + ("sweep",)

BLOCKS = ("params", "grid", "scenario", "solver", "output", "oracle", "sweep")


def _setting(name):
    return lambda: settings.DEPHASING[name]


def _split_values(text):
    return [item.strip() for item in str(text).split(",") if item.strip()]


class GridBlockSerializer(StrictSerializer):
    """Radial grid of the mean-field and perturbative pipelines."""

    r_max_factor = serializers.FloatField(default=_setting("R_MAX_FACTOR"), min_value=1.0)
    n_points = serializers.IntegerField(default=_setting("GRID_POINTS"), min_value=3)
    boundary_points = serializers.IntegerField(
        default=_setting("BOUNDARY_GRID_POINTS"), min_value=3
    )

    def _odd(self, value):
        if value % 2 == 0:
            raise serializers.ValidationError("Simpson quadrature needs an odd node count.")
        return value

    def validate_n_points(self, value):
        return self._odd(value)

    def validate_boundary_points(self, value):
        return self._odd(value)


class ScenarioBlockSerializer(StrictSerializer):
    """
    Initial conditions of a run.

    delta_n0 and delta_phi0 set the A/B two-mode state; population_fraction
    (N_+ / N), delta_theta0 and the P_rel / Q_rel second moments set the
    +/- description used by the moment and dephasing pipelines.
    """

    name = serializers.CharField(default="run", max_length=64)
    delta_n0 = serializers.FloatField(default=0.0)
    delta_phi0 = serializers.FloatField(default=0.0)
    delta_theta0 = serializers.FloatField(default=0.0)
    population_fraction = serializers.FloatField(default=0.5)
    p2_rel0 = serializers.FloatField(default=1.0, min_value=0.0)
    q2_rel0 = serializers.FloatField(default=0.25, min_value=0.0)
    r0_scale = serializers.FloatField(default=1.0)
    n_periods = serializers.FloatField(default=10.0)
    samples_per_period = serializers.IntegerField(default=32, min_value=4)
    initial = serializers.ChoiceField(choices=["self-similar", "ground"], default="self-similar")
    variant = serializers.ChoiceField(choices=list(VARIANTS), default=VARIANTS[0])
    secular_check = serializers.BooleanField(default=False)

    def validate_population_fraction(self, value):
        if not 0.0 < value < 1.0:
            raise serializers.ValidationError("Both modes need atoms: use 0 < fraction < 1.")
        return value

    def validate_r0_scale(self, value):
        if value <= 0:
            raise serializers.ValidationError("The radius scale must be strictly positive.")
        return value

    def validate_n_periods(self, value):
        if value <= 0:
            raise serializers.ValidationError("The run needs a positive length.")
        return value


class SolverBlockSerializer(StrictSerializer):
    dt = serializers.FloatField(default=_setting("GPE_TIME_STEP"))
    steps = serializers.IntegerField(required=False, allow_null=True, default=None, min_value=1)
    record_every = serializers.IntegerField(default=8, min_value=1)
    scheme = serializers.ChoiceField(choices=list(SCHEMES), default=SCHEMES[0])
    basis = serializers.ChoiceField(choices=list(BASES), default=BASES[0])
    coefficient_mode = serializers.ChoiceField(
        choices=list(COEFFICIENT_MODES), default=COEFFICIENT_MODES[0]
    )
    grouping = serializers.ChoiceField(choices=list(GROUPINGS), default=GROUPINGS[0])
    steps_per_period = serializers.IntegerField(default=_setting("STEPS_PER_PERIOD"),
                                                min_value=8)

    def validate_dt(self, value):
        if value <= 0:
            raise serializers.ValidationError("The time step must be strictly positive.")
        return value


class OutputBlockSerializer(StrictSerializer):
    directory = serializers.CharField(default="out")
    emit_svg = serializers.BooleanField(default=False)


class OracleBlockSerializer(StrictSerializer):
    """
    Exact two-mode run. u_int and delta_e default to the Thomas-Fermi
    projection of the params block.
    """

    n_atoms = serializers.IntegerField(default=200, min_value=1, max_value=5000)
    u_int = serializers.FloatField(required=False, allow_null=True, default=None)
    delta_e = serializers.FloatField(required=False, allow_null=True, default=None)
    interaction_asymmetry = serializers.FloatField(default=0.0)
    initial = serializers.ChoiceField(choices=["coherent", "squeezed"], default="coherent")
    width = serializers.FloatField(default=1.0)
    population_fraction = serializers.FloatField(default=0.5, min_value=0.0, max_value=1.0)
    phase = serializers.FloatField(default=0.0)

    def validate_width(self, value):
        if value <= 0:
            raise serializers.ValidationError("The number spread must be strictly positive.")
        return value


class SweepBlockSerializer(StrictSerializer):
    """
    Grid over one or two dotted configuration keys.

    Values are comma-separated and applied as overrides, so they go through
    the same validation as the configuration file.
    """

    first = serializers.CharField(default="", allow_blank=True)
    first_values = serializers.CharField(default="", allow_blank=True)
    second = serializers.CharField(default="", allow_blank=True)
    second_values = serializers.CharField(default="", allow_blank=True)
    target = serializers.ChoiceField(choices=list(TARGETS), default="dephasing")
    workers = serializers.IntegerField(default=_setting("SWEEP_WORKERS"), min_value=1)

    def _check_key(self, key):
        block, _, name = key.partition(".")
        if block not in BLOCKS or block in ("sweep", "output") or not name:
            raise serializers.ValidationError(
                f"{key!r} is not a sweepable key; use <block>.<name> outside sweep and output."
            )

    def validate(self, attrs):
        """
        Checks that every named key is sweepable and has values.

        Raises:
            serializers.ValidationError: If a key lacks values, values lack
                a key, or a key points into the sweep or output blocks.
        """
        for axis in ("first", "second"):
            key, values = attrs[axis], _split_values(attrs[f"{axis}_values"])
            if key:
                self._check_key(key)
                if not values:
                    raise serializers.ValidationError({f"{axis}_values": "No values given."})
            elif values:
                raise serializers.ValidationError({axis: "Values given without a key."})
        if attrs["second"] and not attrs["first"]:
            raise serializers.ValidationError({"first": "Set the first axis before the second."})
        return attrs


class RunConfigSerializer(StrictSerializer):
    """
    Complete run configuration: one nested block per dotted key prefix.

    Missing blocks are validated as empty so that every default is applied.
    """

    params = PhysicalParamsSerializer()
    grid = GridBlockSerializer()
    scenario = ScenarioBlockSerializer()
    solver = SolverBlockSerializer()
    output = OutputBlockSerializer()
    oracle = OracleBlockSerializer()
    sweep = SweepBlockSerializer()

    def to_internal_value(self, data):
        data = dict(data)
        for block in BLOCKS:
            if data.get(block) is None:
                data[block] = {}
        return super().to_internal_value(data)


def sweep_axes(sweep):
    """[(key, [values...]), ...] for the configured sweep axes."""
    return [
        (sweep[axis], _split_values(sweep[f"{axis}_values"]))
        for axis in ("first", "second") if sweep[axis]
    ]
