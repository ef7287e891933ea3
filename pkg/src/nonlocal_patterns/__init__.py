"""Simulation and analysis of u_t = -a u + f(T u) with a truncated convolution T."""
