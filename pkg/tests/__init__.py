"""Test suite for riccati-lift."""
