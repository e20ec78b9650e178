"""Physics-informed skill learning and planning."""
