# Person-trajectory networks: shared-compare event recognition and stacked team identification
