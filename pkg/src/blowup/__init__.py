"""Numerical laboratory for boundary blow-up solutions of -Δu + h(u) + |∇u|^q = f."""
