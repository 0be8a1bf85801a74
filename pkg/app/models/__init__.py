"""
Scenario and report models for the droop simulator
"""
