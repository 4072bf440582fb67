# Network and result models
