"""
API route definitions for the droop simulator service
"""
