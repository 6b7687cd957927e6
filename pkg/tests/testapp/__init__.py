"""Test app for the fsc_distill suite."""
