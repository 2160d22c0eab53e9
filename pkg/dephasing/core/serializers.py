from rest_framework import serializers


class StrictSerializer(serializers.Serializer):
    """
    Serializer that refuses keys it does not declare.

    DRF silently drops unknown input keys; configuration typos must fail
    loudly instead, so the check runs before field validation. Works for
    nested usage too, since nested serializers also go through
    `to_internal_value`.
    """

    def to_internal_value(self, data):
        """
        Rejects undeclared keys, then validates the declared ones.

        Args:
            data (Mapping): Raw input for this serializer.

        Returns:
            OrderedDict: The validated values.

        Raises:
            serializers.ValidationError: If `data` carries keys that are not
                declared fields.
        """
        if hasattr(data, "keys"):
            unknown = sorted(set(data.keys()) - set(self.fields.keys()))
            if unknown:
                raise serializers.ValidationError(
                    {key: "Unknown key." for key in unknown}
                )
        return super().to_internal_value(data)


class PhysicalParamsSerializer(StrictSerializer):
    """
    Validates the raw physical inputs of a run.

    With `units="si"` masses are in kg, angular frequencies in rad/s and
    lengths in m. With `units="trap"` the same quantities are already
    expressed with hbar = 1 in any consistent unit system.
    `delta_omega_sq`, when given, re-splits omega_a and omega_b around their
    mean so that (omega_a**2 - omega_b**2) / 2 equals it.
    """

    units = serializers.ChoiceField(choices=["si", "trap"], default="trap")
    n_total = serializers.FloatField()
    mass = serializers.FloatField(default=1.0)
    omega_a = serializers.FloatField()
    omega_b = serializers.FloatField()
    scattering_length = serializers.FloatField(default=0.0)
    lambda_coupling = serializers.FloatField(default=0.0)
    delta_omega_sq = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate_n_total(self, value):
        """
        Validates that the condensate holds at least one atom.

        Raises:
            serializers.ValidationError: If `value` < 1.
        """
        if value < 1:
            raise serializers.ValidationError("The atom number must be at least 1.")
        return value

    def validate_mass(self, value):
        if value <= 0:
            raise serializers.ValidationError("The atomic mass must be strictly positive.")
        return value

    def validate_omega_a(self, value):
        if value <= 0:
            raise serializers.ValidationError("Trap frequencies must be strictly positive.")
        return value

    def validate_omega_b(self, value):
        if value <= 0:
            raise serializers.ValidationError("Trap frequencies must be strictly positive.")
        return value

    def validate_scattering_length(self, value):
        if value < 0:
            raise serializers.ValidationError(
                "Only repulsive interactions (a_SC >= 0) are supported."
            )
        return value

    def validate_lambda_coupling(self, value):
        if value < 0:
            raise serializers.ValidationError("The Josephson coupling must be nonnegative.")
        return value

    def validate(self, attrs):
        """
        Checks that an explicit `delta_omega_sq` leaves both traps confining.

        Raises:
            serializers.ValidationError: If the split would make omega_b**2
                or omega_a**2 nonpositive.
        """
        delta = attrs.get("delta_omega_sq")
        if delta is not None:
            mean_sq = (attrs["omega_a"] ** 2 + attrs["omega_b"] ** 2) / 2
            if abs(delta) >= mean_sq:
                raise serializers.ValidationError(
                    {"delta_omega_sq": "The asymmetry must stay below the mean squared frequency."}
                )
        return attrs
