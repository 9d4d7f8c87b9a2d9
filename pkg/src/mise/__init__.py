"""Mixed-state inverse engineering toolkit."""
