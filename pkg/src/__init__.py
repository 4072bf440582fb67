# trainpaths - train dispatching by column generation
