"""Analysis services, one module per concern."""
