"""util_deps - atomic dependencies for scldpc utils."""
