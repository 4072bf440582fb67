# Report chart components
