from hypothesis import HealthCheck, settings

# Grid-building examples can exceed the default per-example deadline on a
# loaded machine; the identities under test are deterministic, so only the
# wall-clock guards are relaxed.
settings.register_profile(
    "photonloc",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("photonloc")
