"""The separation compilation chains and their runnable demos."""
